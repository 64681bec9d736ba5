#include "chemoplan/validation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "chemoplan/dynamics.hpp"
#include "chemoplan/scenarios.hpp"
#include "chemoplan/solver.hpp"
#include "chemoplan/transcription.hpp"

namespace chemoplan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::ostringstream fixed_stream() {
    std::ostringstream os;
    os.precision(6);
    return os;
}

// Expands a coarse dose schedule onto a grid refined by the given factor.
std::vector<double> refine_doses(const std::vector<double>& doses, int factor) {
    std::vector<double> fine((doses.size() - 1) * factor + 1, 0.0);
    for (size_t s = 0; s + 1 < doses.size(); ++s) fine[s * factor] = doses[s];
    return fine;
}

// A small seeded MILP: a few variables of mixed kinds with finite bounds,
// a handful of short rows, and a dense objective. Small enough for the
// enumeration oracle.
milp_model random_micro_milp(std::mt19937_64& rng) {
    milp_model m;
    m.name = "random_micro";
    std::uniform_int_distribution<int> n_vars_pick(3, 6);
    std::uniform_int_distribution<int> kind_pick(0, 9);
    std::uniform_int_distribution<int> lo_pick(-3, 0);
    std::uniform_int_distribution<int> hi_pick(0, 3);
    std::uniform_int_distribution<int> coef_pick(-3, 3);
    std::uniform_int_distribution<int> rhs_pick(-6, 6);
    std::uniform_int_distribution<int> sense_pick(0, 9);
    std::uniform_real_distribution<double> obj_pick(-5.0, 5.0);

    const int n = n_vars_pick(rng);
    for (int i = 0; i < n; ++i) {
        const std::string name = "x" + std::to_string(i);
        const int kind = kind_pick(rng);
        if (kind < 4)
            m.add_var(name, var_kind::binary, 0.0, 1.0);
        else if (kind < 7)
            m.add_var(name, var_kind::integer, lo_pick(rng), hi_pick(rng));
        else
            m.add_var(name, var_kind::continuous, -5.0, 5.0);
    }
    std::uniform_int_distribution<int> n_rows_pick(n, 2 * n);
    std::uniform_int_distribution<int> col_pick(0, n - 1);
    const int rows = n_rows_pick(rng);
    for (int r = 0; r < rows; ++r) {
        std::vector<lin_term> terms;
        std::vector<int> used;
        const int len = 2 + static_cast<int>(rng() % 2);
        for (int t = 0; t < len; ++t) {
            int col = col_pick(rng);
            if (std::find(used.begin(), used.end(), col) != used.end()) continue;
            int coef = coef_pick(rng);
            if (coef == 0) coef = 1;
            terms.push_back({col, static_cast<double>(coef)});
            used.push_back(col);
        }
        // mostly inequalities; equalities over small integer domains are
        // usually infeasible and would starve the optimal-path comparison
        const int sense_draw = sense_pick(rng);
        const row_sense sense = sense_draw < 5   ? row_sense::le
                                : sense_draw < 9 ? row_sense::ge
                                                 : row_sense::eq;
        // usually keep the all-zero point feasible so most instances have an
        // optimum; the rest stay fully random to also exercise infeasibility
        int rhs = rhs_pick(rng);
        if (sense_pick(rng) < 8) {
            if (sense == row_sense::le) rhs = std::abs(rhs);
            if (sense == row_sense::ge) rhs = -std::abs(rhs);
            if (sense == row_sense::eq) rhs = 0;
        }
        m.add_row("r" + std::to_string(r), std::move(terms), sense, static_cast<double>(rhs));
    }
    for (int i = 0; i < n; ++i) m.add_objective_term(i, obj_pick(rng));
    return m;
}

}  // namespace

model_params micro_instance() {
    model_params p;
    drug_params d;
    d.id = 0;
    d.name = "orapill";
    d.admin_route = route::oral;
    d.xi = 0.8;
    d.eta0 = 5.1e-3;
    d.eta_by_type = {5.1e-3, 0.25 * 5.1e-3};
    d.eta_wbc = 5.1e-3;
    d.rho = 1.4e-2;
    d.beta_eff = 0.5;
    d.beta_conc = 0.12;
    d.beta_rate = 0.03;
    d.beta_cum = 0.06;
    d.pill_mass = 0.05;
    p.drugs.push_back(d);
    p.tumor.cell_types = {{"sensitive", -1}, {"resistant", 0}};
    p.tumor.n0_by_type = {8e8, 6.7e7};
    p.tumor.n_inf_by_type = {2.5e11, 2.5e11};
    p.tumor.lambda = 7e-4;
    p.wbc.n_w0 = 8e12;
    p.wbc.production = 1.2e12;
    p.wbc.turnover = 0.15;
    p.wbc.delay_days = 5;
    p.wbc.theta_neu = 0.5;
    p.wbc.theta_lym = 0.3;
    p.wbc.beta_neu = 2.5e12;
    p.wbc.beta_lym = 1e12;
    p.grid.horizon_days = 2;
    p.grid.step_hours = 6.0;
    p.grid.meal_offsets = {8.0, 19.0};
    p.grid.wbc_lag_days = 5;
    regimen_spec r;
    r.drug = "orapill";
    r.dose_per_admin = 0.03;
    r.admin_hours = {8.0, 19.0};
    r.days_on = 2;
    r.days_rest = 0;
    r.cycles = 1;
    r.prr = 0.09;
    p.regimens["orapill"] = r;
    return p;
}

property_report check_stability_guards(const model_params& params) {
    property_report rep;
    rep.name = "stability";

    bool ok = true;
    std::ostringstream os = fixed_stream();
    // the predicate is strict at the boundary h = 2/rate
    if (!check_stability(1.9, 1.0, stability_kind::pk)) ok = false;
    if (check_stability(2.0, 1.0, stability_kind::pk)) ok = false;
    if (check_stability(2.4, 1.0, stability_kind::pd)) ok = false;

    // the model builder refuses an unstable step outright
    model_params unstable = params;
    unstable.drugs[0].xi = 2.0 / unstable.grid.step_days() + 1.0;
    bool refused = false;
    try {
        build_options opts;
        build_deterministic(unstable, opts);
    } catch (const milp_error&) {
        refused = true;
    }
    if (!refused) ok = false;

    os << "boundary h<2/rate " << (ok ? "enforced" : "broken") << ", unstable build "
       << (refused ? "refused" : "accepted");
    rep.passed = ok;
    rep.detail = os.str();
    return rep;
}

property_report check_euler_error_bound(const model_params& params) {
    property_report rep;
    rep.name = "euler-error-bound";

    // single oral drug, five days, two pills per day at the outer meals
    const drug_params* picked = nullptr;
    for (const auto& d : params.drugs)
        if (d.name == "etoposide") picked = &d;
    if (picked == nullptr)
        for (const auto& d : params.drugs)
            if (d.admin_route == route::oral && d.pill_mass) picked = &d;
    if (picked == nullptr) throw sim_error("error-bound check needs an oral drug with a pill size");
    const drug_params drug = *picked;
    tumor_params tumor = params.tumor;
    std::vector<drug_params> drugs{drug};

    double max_err[2] = {0.0, 0.0};
    double bound[2] = {0.0, 0.0};
    bool within = true;
    const double hours[2] = {1.0, 0.5};
    for (int i = 0; i < 2; ++i) {
        time_grid grid = params.grid;
        grid.horizon_days = 5;
        grid.step_hours = hours[i];
        const int S = grid.n_steps();
        std::vector<double> doses(S + 1, 0.0);
        const std::vector<int> offs = grid.meal_steps_in_day();
        for (int mm = 0; mm < grid.horizon_days; ++mm) {
            doses[mm * grid.steps_per_day() + offs.front()] = *drug.pill_mass;
            doses[mm * grid.steps_per_day() + offs.back()] = *drug.pill_mass;
        }

        trajectory euler_pk = simulate_pk(drug, doses, grid);
        std::vector<trajectory> euler_pd = simulate_pd(tumor, drugs, {euler_pk}, grid);
        const double fine_step = grid.step_days() / 32.0;
        std::vector<trajectory> ref_pd = rk4_reference_pd(tumor, drugs, {doses}, grid, fine_step);

        for (int q = 0; q < static_cast<int>(euler_pd.size()); ++q)
            for (int s = 0; s <= S; ++s)
                max_err[i] = std::max(max_err[i],
                                      std::fabs(euler_pd[q].values[s] - ref_pd[q].values[s]));

        // curvature estimates from a refined reference run, dosing steps
        // excluded (impulses are jumps, not curvature)
        const int refine = 32;
        time_grid fine_grid = grid;
        fine_grid.step_hours = grid.step_hours / refine;
        std::vector<double> fine_doses = refine_doses(doses, refine);
        std::vector<int> impulse_steps;
        for (size_t s = 0; s < fine_doses.size(); ++s)
            if (fine_doses[s] > 0.0) impulse_steps.push_back(static_cast<int>(s));
        trajectory fine_pk =
            rk4_reference_pk(drug, fine_doses, fine_grid, fine_grid.step_days() / 16.0);
        std::vector<trajectory> fine_pd =
            rk4_reference_pd(tumor, drugs, {fine_doses}, fine_grid, fine_grid.step_days() / 16.0);
        const double alpha_z =
            estimate_curvature(fine_pk.values, fine_grid.step_days(), impulse_steps);
        double alpha_y = 0.0;
        for (const auto& t : fine_pd)
            alpha_y =
                std::max(alpha_y, estimate_curvature(t.values, fine_grid.step_days(), impulse_steps));

        double lip_f = tumor.lambda;
        for (double e : drug.eta_by_type) lip_f = std::max(lip_f, e);
        bound[i] = euler_error_bound(grid, drug.xi, lip_f, alpha_z, alpha_y);
        if (max_err[i] > bound[i]) within = false;
    }
    const double ratio = max_err[1] / max_err[0];
    rep.passed = within && ratio >= 0.3 && ratio <= 0.7;
    std::ostringstream os;
    os.precision(3);
    os << "max|Euler-RK4| " << max_err[0] << " <= bound " << bound[0] << " (1h), " << max_err[1]
       << " <= " << bound[1] << " (30min), halving ratio " << ratio << " in [0.3, 0.7]";
    rep.detail = os.str();
    return rep;
}

property_report check_dominance(const model_params& params, std::uint64_t seed, int pairs) {
    property_report rep;
    rep.name = "dominance";

    time_grid grid = params.grid;
    grid.horizon_days = 3;
    grid.step_hours = 6.0;
    const int S = grid.n_steps();
    const int D = static_cast<int>(params.drugs.size());

    int violations = 0;
    for (int rep_i = 0; rep_i < pairs; ++rep_i) {
        std::mt19937_64 rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (rep_i + 1))));
        std::uniform_real_distribution<double> base_pick(0.0, 3.0);
        std::uniform_real_distribution<double> extra_pick(0.0, 1.5);
        std::vector<std::vector<double>> weak(D, std::vector<double>(S + 1, 0.0));
        auto strong = weak;
        for (int d = 0; d < D; ++d) {
            for (int s = 0; s <= S; ++s) {
                weak[d][s] = base_pick(rng);
                strong[d][s] = weak[d][s] + extra_pick(rng);
            }
        }
        auto pd_strong = simulate_pd_effective(params.tumor, params.drugs, strong, grid);
        auto pd_weak = simulate_pd_effective(params.tumor, params.drugs, weak, grid);
        for (size_t q = 0; q < pd_strong.size(); ++q)
            if (pd_strong[q].values[S] > pd_weak[q].values[S] + 1e-10) ++violations;
    }
    rep.passed = violations == 0;
    std::ostringstream os;
    os << pairs << " schedule pairs, " << violations << " dominance violations";
    rep.detail = os.str();
    return rep;
}

property_report check_oracle_equivalence(std::uint64_t seed, int instances) {
    property_report rep;
    rep.name = "oracle-equivalence";

    double worst = 0.0;
    int status_mismatches = 0;
    int infeasible_count = 0;
    for (int i = 0; i < instances; ++i) {
        std::mt19937_64 rng(splitmix64(seed ^ (0xbf58476d1ce4e5b9ULL * (i + 1))));
        milp_model m = random_micro_milp(rng);
        solve_result bb = solve_builtin(m);
        solve_result ex = enumerate_exact(m);
        if (bb.status != ex.status) {
            ++status_mismatches;
            continue;
        }
        if (bb.status == solve_status::optimal)
            worst = std::max(worst, std::fabs(bb.objective - ex.objective));
        else
            ++infeasible_count;
    }

    // the planning fixture, solved both ways
    build_options opts;
    opts.wbc_levels = 2;
    transcribed_model tm = build_deterministic(micro_instance(), opts);
    solve_result bb = solve_builtin(tm.milp);
    solve_result ex = enumerate_exact(tm.milp);
    const bool chemo_ok = bb.status == solve_status::optimal && ex.status == solve_status::optimal &&
                          std::fabs(bb.objective - ex.objective) <= 1e-7;
    if (bb.status == solve_status::optimal && ex.status == solve_status::optimal)
        worst = std::max(worst, std::fabs(bb.objective - ex.objective));

    rep.passed = status_mismatches == 0 && worst <= 1e-7 && chemo_ok;
    std::ostringstream os;
    os.precision(3);
    os << instances << " random instances (" << infeasible_count << " infeasible), "
       << status_mismatches << " status mismatches, worst objective gap " << worst
       << "; planning fixture gap " << std::fabs(bb.objective - ex.objective);
    rep.detail = os.str();
    return rep;
}

property_report check_branching_mean(std::uint64_t seed, int replications) {
    property_report rep;
    rep.name = "branching-mean";

    branching_params bp;
    bp.alpha_mut = {0.005, 0.005, 0.005};
    const int generations = 30;
    auto pops = simulate_branching(bp, generations, replications, seed);
    const double expected = expected_populations(bp, generations)[0];
    double mean = 0.0;
    for (const auto& rep_pops : pops) mean += static_cast<double>(rep_pops[0]);
    mean /= static_cast<double>(pops.size());
    double var = 0.0;
    for (const auto& rep_pops : pops) {
        const double d = static_cast<double>(rep_pops[0]) - mean;
        var += d * d;
    }
    var /= static_cast<double>(pops.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(pops.size()));
    const double dev = std::fabs(mean - expected);

    rep.passed = dev <= 3.0 * se;
    std::ostringstream os;
    os.precision(6);
    os << "mean " << mean << " vs expectation " << expected << ", |dev| " << dev << " <= 3*SE "
       << 3.0 * se;
    rep.detail = os.str();
    return rep;
}

std::vector<property_report> run_property_suites(const model_params& params, std::uint64_t seed) {
    return {check_stability_guards(params), check_euler_error_bound(params),
            check_dominance(params, seed), check_oracle_equivalence(seed),
            check_branching_mean(seed)};
}

}  // namespace chemoplan
