#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "chemoplan/analysis.hpp"
#include "chemoplan/domain.hpp"
#include "chemoplan/validation.hpp"

using namespace chemoplan;

namespace {

int pills_per_meal(const model_params& p, const std::string& drug) {
    const drug_params& d = p.drug_by_name(drug);
    return static_cast<int>(d.beta_rate * p.grid.body_surface / *d.pill_mass + 1e-6);
}

int pills_per_day(const model_params& p, const std::string& drug) {
    const drug_params& d = p.drug_by_name(drug);
    return static_cast<int>(d.beta_cum * p.grid.body_surface / *d.pill_mass + 1e-6);
}

}  // namespace

TEST_CASE("sweep target names round-trip") {
    for (const char* name : {"clearance", "kill-effect", "wbc-kill-effect", "resistance-decay",
                             "neutropenia-threshold", "max-dose"})
        CHECK(to_string(sweep_target_from_string(name)) == name);
    CHECK_THROWS_AS(sweep_target_from_string("potency"), param_error);
}

TEST_CASE("scaling at fraction one returns the base parameters verbatim") {
    model_params p = load_params("data/params_default.ini");
    model_params q = scale_parameter(p, sweep_target::max_dose, "capecitabine", 1.0);
    CHECK(q.drugs[0].beta_rate == p.drugs[0].beta_rate);
    CHECK(q.drugs[0].beta_conc == p.drugs[0].beta_conc);
    CHECK(q.regimens.at("capecitabine").dose_per_admin ==
          p.regimens.at("capecitabine").dose_per_admin);
}

TEST_CASE("clearance scaling is capped at the physical one-per-day limit") {
    model_params p = load_params("data/params_default.ini");
    model_params q = scale_parameter(p, sweep_target::clearance, "etoposide", 1.5);
    // 0.8 * 1.5 = 1.2 would exceed the cap
    CHECK(q.drug_by_name("etoposide").xi == doctest::Approx(1.0));
    model_params r = scale_parameter(p, sweep_target::clearance, "capecitabine", 1.5);
    CHECK(r.drug_by_name("capecitabine").xi == doctest::Approx(0.9));
}

TEST_CASE("dose-level scaling relevels whole pills and shifts the caps") {
    model_params p = load_params("data/params_default.ini");
    REQUIRE(pills_per_day(p, "capecitabine") == 8);
    REQUIRE(pills_per_meal(p, "capecitabine") == 4);
    REQUIRE(pills_per_day(p, "etoposide") == 2);
    REQUIRE(pills_per_meal(p, "etoposide") == 1);

    SUBCASE("oral caps move to the next whole pill") {
        model_params up = scale_parameter(p, sweep_target::max_dose, "capecitabine", 1.25);
        CHECK(pills_per_day(up, "capecitabine") == 10);
        CHECK(pills_per_meal(up, "capecitabine") == 5);
        CHECK(up.drug_by_name("capecitabine").beta_conc == doctest::Approx(8.875));

        model_params down = scale_parameter(p, sweep_target::max_dose, "capecitabine", 0.75);
        CHECK(pills_per_day(down, "capecitabine") == 6);
        CHECK(pills_per_meal(down, "capecitabine") == 3);
        CHECK(down.drug_by_name("capecitabine").beta_conc == doctest::Approx(5.325));
    }
    SUBCASE("coarse pill counts relevel asymmetrically") {
        model_params up = scale_parameter(p, sweep_target::max_dose, "etoposide", 1.25);
        CHECK(pills_per_day(up, "etoposide") == 3);
        CHECK(pills_per_meal(up, "etoposide") == 2);
        // the per-meal step doubles, and the concentration cap tracks the
        // simulated trial peak
        CHECK(up.drug_by_name("etoposide").beta_conc == doctest::Approx(0.24));

        model_params down = scale_parameter(p, sweep_target::max_dose, "etoposide", 0.75);
        CHECK(pills_per_day(down, "etoposide") == 1);
        CHECK(pills_per_meal(down, "etoposide") == 1);
        CHECK(down.drug_by_name("etoposide").beta_conc == doctest::Approx(0.12));
    }
    SUBCASE("intravenous limits scale continuously") {
        model_params up = scale_parameter(p, sweep_target::max_dose, "docetaxel", 1.2);
        CHECK(up.drug_by_name("docetaxel").beta_rate == doctest::Approx(0.12));
        CHECK(up.drug_by_name("docetaxel").beta_cum == doctest::Approx(0.12));
        CHECK(up.drug_by_name("docetaxel").beta_conc == doctest::Approx(0.204));
        model_params down = scale_parameter(p, sweep_target::max_dose, "docetaxel", 0.8);
        CHECK(down.drug_by_name("docetaxel").beta_conc == doctest::Approx(0.136));
    }
}

TEST_CASE("identity sweep point reproduces the direct solve") {
    model_params p = micro_instance();
    build_options opts;
    opts.wbc_levels = 2;
    solve_backend backend;  // empty command -> built-in solver

    sweep_result res = sensitivity_sweep(p, sweep_target::kill_effect, "orapill", {1.0}, opts,
                                         backend);
    REQUIRE(res.points.size() == 1);
    CHECK(res.points[0].solved);
    CHECK(res.points[0].status == "optimal");
    CHECK(res.points[0].objective == doctest::Approx(38.5005074343).epsilon(1e-9));
}

TEST_CASE("stronger kill effects can only lower the optimal burden") {
    model_params p = micro_instance();
    build_options opts;
    opts.wbc_levels = 2;
    solve_backend backend;

    sweep_result res = sensitivity_sweep(p, sweep_target::kill_effect, "orapill",
                                         {0.8, 1.0, 1.2}, opts, backend);
    REQUIRE(res.points.size() == 3);
    for (const auto& pt : res.points) REQUIRE(pt.status == "optimal");
    CHECK(res.points[0].objective > res.points[1].objective);
    CHECK(res.points[1].objective > res.points[2].objective);
}

TEST_CASE("slack neutropenia floors leave the fixture optimum unchanged") {
    model_params p = micro_instance();
    build_options opts;
    opts.wbc_levels = 2;
    solve_backend backend;

    sweep_result res = sensitivity_sweep(p, sweep_target::neutropenia_threshold, "",
                                         {0.5, 1.0}, opts, backend);
    REQUIRE(res.points.size() == 2);
    REQUIRE(res.points[0].status == "optimal");
    REQUIRE(res.points[1].status == "optimal");
    CHECK(res.points[0].objective == doctest::Approx(res.points[1].objective).epsilon(1e-9));
}

TEST_CASE("sweeps fail fast on bad selectors") {
    model_params p = micro_instance();
    build_options opts;
    solve_backend backend;
    CHECK_THROWS_AS(sensitivity_sweep(p, sweep_target::kill_effect, "nosuchdrug", {1.0}, opts,
                                      backend),
                    param_error);
    CHECK_THROWS_AS(sensitivity_sweep(p, sweep_target::kill_effect, "orapill", {}, opts, backend),
                    param_error);
}

TEST_CASE("sweep CSV starts with the documented header") {
    model_params p = micro_instance();
    build_options opts;
    opts.wbc_levels = 2;
    solve_backend backend;
    sweep_result res =
        sensitivity_sweep(p, sweep_target::kill_effect, "orapill", {1.0}, opts, backend);
    const std::string path = "chemoplan_sweep_test.csv";
    save_sweep_csv(res, path);
    std::ifstream in(path);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "target,drug,fraction,status,objective,gap,runtime_seconds,message");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 1);
    in.close();
    std::remove(path.c_str());
}

TEST_CASE("regularization of an already regular plan is a fixed point") {
    model_params p = micro_instance();
    const int S = p.grid.n_steps();
    treatment_plan plan;
    plan.doses.assign(1, std::vector<double>(S + 1, 0.0));
    for (int s : p.grid.meal_steps())
        if (s < S) plan.doses[0][s] = 0.05;  // one pill at every meal, both days

    regularization_result res = regularize_plan(plan, p);
    CHECK(res.accepted);
    CHECK(res.regulated.doses == plan.doses);
    CHECK(res.diameter_delta_mm() == doctest::Approx(0.0).epsilon(1e-12));

    regularization_result again = regularize_plan(res.regulated, p);
    CHECK(again.accepted);
    CHECK(again.regulated.doses == res.regulated.doses);
}

TEST_CASE("regularization balances an uneven oral pattern day by day") {
    model_params p = micro_instance();
    const int S = p.grid.n_steps();
    const auto meals = p.grid.meal_steps();  // steps 1, 3 on day 0; 5, 7 on day 1
    REQUIRE(meals.size() == 4);
    treatment_plan plan;
    plan.doses.assign(1, std::vector<double>(S + 1, 0.0));
    // two pills on day 0 (one per meal), none on day 1: day 1 becomes an
    // induced rest day and must stay dose-free after regularization
    plan.doses[0][meals[0]] = 0.05;
    plan.doses[0][meals[1]] = 0.05;

    regularization_result res = regularize_plan(plan, p);
    const auto& reg = res.regulated.doses[0];
    CHECK(reg[meals[0]] == doctest::Approx(0.05));
    CHECK(reg[meals[1]] == doctest::Approx(0.05));
    CHECK(reg[meals[2]] == 0.0);
    CHECK(reg[meals[3]] == 0.0);
}

TEST_CASE("configuration comparison reports sizes and the relaxation ordering") {
    model_params p = micro_instance();
    std::vector<comparison_config> configs;
    comparison_config tight;
    tight.step_hours = 6.0;
    tight.bilinear = bilinear_mode::discrete;
    tight.wbc_levels = 2;
    comparison_config relaxed = tight;
    relaxed.bilinear = bilinear_mode::mccormick;
    configs.push_back(tight);
    configs.push_back(relaxed);

    solve_backend backend;
    std::vector<comparison_row> rows = compare_configurations(p, configs, backend);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].solved);
    CHECK(rows[1].solved);
    CHECK(rows[0].bilinear == "discrete");
    CHECK(rows[1].bilinear == "mccormick");
    CHECK(rows[1].objective <= rows[0].objective + 1e-9);
    CHECK(rows[0].n_vars > 0);
    CHECK(rows[0].n_rows > rows[1].n_rows);  // the level ladder adds rows

    const std::string path = "chemoplan_compare_test.csv";
    save_comparison_csv(rows, path);
    std::ifstream in(path);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header ==
          "label,step_hours,bilinear,wbc_levels,status,objective,gap,runtime_seconds,n_vars,"
          "n_rows,n_integer,n_binary,message");
    in.close();
    std::remove(path.c_str());
}
