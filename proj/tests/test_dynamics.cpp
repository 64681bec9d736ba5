#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "chemoplan/domain.hpp"
#include "chemoplan/dynamics.hpp"

using namespace chemoplan;

namespace {

drug_params test_drug() {
    drug_params d;
    d.id = 0;
    d.name = "testdrug";
    d.admin_route = route::oral;
    d.xi = 0.8;
    d.eta0 = 5e-3;
    d.eta_by_type = {5e-3, 1.25e-3};
    d.eta_wbc = 5e-3;
    d.rho = 0.0;
    d.beta_eff = 0.0;
    d.beta_conc = 0.12;
    d.beta_rate = 0.03;
    d.beta_cum = 0.06;
    d.pill_mass = 0.05;
    return d;
}

tumor_params test_tumor() {
    tumor_params t;
    t.cell_types = {{"sensitive", -1}, {"resistant", 0}};
    t.n0_by_type = {8e8, 6.7e7};
    t.n_inf_by_type = {2.5e11, 2.5e11};
    t.lambda = 7e-4;
    return t;
}

time_grid test_grid(int days = 2, double hours = 6.0) {
    time_grid g;
    g.horizon_days = days;
    g.step_hours = hours;
    g.meal_offsets = {8.0, 19.0};
    return g;
}

}  // namespace

TEST_CASE("concentration follows the Euler recursion exactly") {
    drug_params d = test_drug();
    time_grid g = test_grid();
    const int S = g.n_steps();
    std::vector<double> doses(S + 1, 0.0);
    doses[0] = 0.05;
    doses[3] = 0.10;
    trajectory c = simulate_pk(d, doses, g);
    REQUIRE(c.size() == S + 1);
    CHECK(c.values[0] == 0.0);

    const double h = g.step_days();
    double expect = 0.0;
    for (int s = 0; s < S; ++s) {
        expect = expect - h * d.xi * expect + doses[s] / g.compartment_volume;
        CHECK(c.values[s + 1] == doctest::Approx(expect).epsilon(1e-14));
    }
    // a single impulse decays geometrically with factor (1 - h xi)
    CHECK(c.values[1] == doctest::Approx(0.05 / g.compartment_volume).epsilon(1e-14));
    CHECK(c.values[2] == doctest::Approx(c.values[1] * (1.0 - h * d.xi)).epsilon(1e-14));
}

TEST_CASE("final dose entry cannot influence the trajectory") {
    drug_params d = test_drug();
    time_grid g = test_grid();
    std::vector<double> doses(g.n_steps() + 1, 0.0);
    doses.back() = 1.0;
    trajectory c = simulate_pk(d, doses, g);
    for (double v : c.values) CHECK(v == 0.0);
}

TEST_CASE("effective concentration clips at the threshold") {
    CHECK(effective_concentration(3.0, 0.5) == doctest::Approx(2.5));
    CHECK(effective_concentration(0.4, 0.5) == 0.0);
    drug_params d = test_drug();
    d.beta_eff = 0.5;
    auto eff = effective_concentration(d, {0.0, 0.2, 0.5, 1.7});
    CHECK(eff == std::vector<double>{0.0, 0.0, 0.0, 1.2});
}

TEST_CASE("drug-free growth contracts toward the asymptote at rate lambda") {
    tumor_params t = test_tumor();
    time_grid g = test_grid(10, 6.0);
    const int S = g.n_steps();
    std::vector<trajectory> pd =
        simulate_pd(t, {test_drug()}, {simulate_pk(test_drug(), std::vector<double>(S + 1, 0.0), g)}, g);
    REQUIRE(pd.size() == 2);
    const double h = g.step_days();
    for (size_t q = 0; q < pd.size(); ++q) {
        const double ln_inf = std::log(t.n_inf_by_type[q]);
        const double gap0 = ln_inf - std::log(t.n0_by_type[q]);
        for (int s = 0; s <= S; ++s) {
            const double expect = ln_inf - gap0 * std::pow(1.0 - h * t.lambda, s);
            CHECK(pd[q].values[s] == doctest::Approx(expect).epsilon(1e-12));
        }
        // growth toward the asymptote is monotone
        for (int s = 0; s < S; ++s) CHECK(pd[q].values[s + 1] >= pd[q].values[s]);
    }
}

TEST_CASE("kill term matches a hand-rolled recursion with temporal resistance") {
    drug_params d = test_drug();
    d.rho = 1.4e-2;
    tumor_params t = test_tumor();
    time_grid g = test_grid(3, 4.0);
    const int S = g.n_steps();
    std::vector<double> doses(S + 1, 0.0);
    for (int s : g.meal_steps()) doses[s] = 0.05;
    trajectory c = simulate_pk(d, doses, g);
    auto pd = simulate_pd(t, {d}, {c}, g);

    const double h = g.step_days();
    for (size_t q = 0; q < t.cell_types.size(); ++q) {
        double p = std::log(t.n0_by_type[q]);
        for (int s = 0; s < S; ++s) {
            const double ln_inf = std::log(t.n_inf_by_type[q]);
            p += h * (t.lambda * (ln_inf - p) -
                      d.eta_by_type[q] * std::exp(-d.rho * g.t_days(s)) * c.values[s]);
            CHECK(pd[q].values[s + 1] == doctest::Approx(p).epsilon(1e-13));
        }
    }
}

TEST_CASE("effective-concentration form equals raw form when thresholds are zero") {
    drug_params d = test_drug();
    tumor_params t = test_tumor();
    time_grid g = test_grid(2, 6.0);
    const int S = g.n_steps();
    std::vector<double> doses(S + 1, 0.0);
    doses[1] = 0.05;
    trajectory c = simulate_pk(d, doses, g);
    auto via_raw = simulate_pd(t, {d}, {c}, g);
    auto via_eff = simulate_pd_effective(t, {d}, {c.values}, g);
    for (size_t q = 0; q < via_raw.size(); ++q)
        for (int s = 0; s <= S; ++s)
            CHECK(via_raw[q].values[s] == doctest::Approx(via_eff[q].values[s]).epsilon(1e-14));
}

TEST_CASE("white cells hold their equilibrium without drugs") {
    wbc_params w;
    w.n_w0 = 8e12;
    w.production = 1.2e12;
    w.turnover = 0.15;
    w.delay_days = 5;
    w.theta_neu = 0.5;
    w.theta_lym = 0.3;
    w.beta_neu = 2.5e12;
    w.beta_lym = 1e12;
    const int days = 21;
    std::vector<std::vector<double>> conc{std::vector<double>(days + 1, 0.0)};
    trajectory n = simulate_wbc(w, {test_drug()}, conc, days);
    REQUIRE(n.size() == days + 1);
    for (double v : n.values) CHECK(v == doctest::Approx(8e12).epsilon(1e-14));
}

TEST_CASE("white-cell kill only acts after the response delay") {
    wbc_params w;
    w.n_w0 = 8e12;
    w.production = 1.2e12;
    w.turnover = 0.15;
    w.delay_days = 3;
    w.theta_neu = 0.5;
    w.theta_lym = 0.3;
    w.beta_neu = 2.5e12;
    w.beta_lym = 1e12;
    drug_params d = test_drug();
    const int days = 10;
    std::vector<std::vector<double>> conc{std::vector<double>(days + 1, 2.0)};
    trajectory n = simulate_wbc(w, {d}, conc, days);

    double expect = w.n_w0;
    for (int m = 0; m < days; ++m) {
        double kill = m >= w.delay_days ? d.eta_wbc * conc[0][m - w.delay_days] * expect : 0.0;
        expect += w.production - w.turnover * expect - kill;
        CHECK(n.values[m + 1] == doctest::Approx(expect).epsilon(1e-13));
    }
    // the first delayed days stay at equilibrium, later ones dip below it
    CHECK(n.values[w.delay_days] == doctest::Approx(8e12));
    CHECK(n.values[days] < 8e12);
}

TEST_CASE("stability predicate is strict at h = 2/rate") {
    CHECK(check_stability(1.99, 1.0, stability_kind::pk));
    CHECK_FALSE(check_stability(2.0, 1.0, stability_kind::pk));
    CHECK_FALSE(check_stability(2.01, 1.0, stability_kind::pd));
    CHECK(check_stability(0.25, 0.8, stability_kind::pd));
}

TEST_CASE("reference concentration matches the analytic impulse response") {
    drug_params d = test_drug();
    time_grid g = test_grid(2, 1.0);
    const int S = g.n_steps();
    std::vector<double> doses(S + 1, 0.0);
    doses[0] = 0.05;
    trajectory ref = rk4_reference_pk(d, doses, g, g.step_days() / 64.0);
    const double c0 = 0.05 / g.compartment_volume;
    for (int s = 1; s <= S; ++s) {
        const double analytic = c0 * std::exp(-d.xi * g.t_days(s));
        CHECK(ref.values[s] == doctest::Approx(analytic).epsilon(1e-9));
    }
}

TEST_CASE("reference growth matches the analytic Gompertz solution") {
    tumor_params t = test_tumor();
    time_grid g = test_grid(5, 2.0);
    const int S = g.n_steps();
    std::vector<std::vector<double>> doses{std::vector<double>(S + 1, 0.0)};
    auto ref = rk4_reference_pd(t, {test_drug()}, doses, g, g.step_days() / 32.0);
    for (size_t q = 0; q < ref.size(); ++q) {
        const double ln_inf = std::log(t.n_inf_by_type[q]);
        const double gap0 = ln_inf - std::log(t.n0_by_type[q]);
        for (int s = 0; s <= S; ++s) {
            const double analytic = ln_inf - gap0 * std::exp(-t.lambda * g.t_days(s));
            CHECK(ref[q].values[s] == doctest::Approx(analytic).epsilon(1e-10));
        }
    }
}

TEST_CASE("curvature estimator recovers a quadratic's second derivative") {
    const double dt = 0.25;
    std::vector<double> values;
    for (int i = 0; i <= 20; ++i) {
        const double x = i * dt;
        values.push_back(3.0 * x * x - 2.0 * x + 1.0);
    }
    CHECK(estimate_curvature(values, dt) == doctest::Approx(6.0).epsilon(1e-9));

    // a jump would dominate; excluding it (and neighbors) restores the bound
    values[10] += 100.0;
    CHECK(estimate_curvature(values, dt) > 100.0);
    CHECK(estimate_curvature(values, dt, {10}) == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("error bound scales linearly with the step") {
    time_grid coarse = test_grid(5, 2.0);
    time_grid fine = test_grid(5, 1.0);
    const double b_coarse = euler_error_bound(coarse, 0.8, 7e-4, 10.0, 1.0);
    const double b_fine = euler_error_bound(fine, 0.8, 7e-4, 10.0, 1.0);
    CHECK(b_coarse > 0.0);
    CHECK(b_coarse == doctest::Approx(2.0 * b_fine).epsilon(1e-12));
}

TEST_CASE("trajectory CSV export writes a header and one row per grid point") {
    trajectory a;
    a.times = {0.0, 0.5, 1.0};
    a.values = {1.0, 2.0, 3.0};
    trajectory b = a;
    b.values = {4.0, 5.0, 6.0};
    const std::string path = "chemoplan_traj_test.csv";
    save_trajectories_csv({a, b}, {"first", "second"}, path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "t_days,first,second");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
    in.close();
    std::remove(path.c_str());
}
