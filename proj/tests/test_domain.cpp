#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "chemoplan/domain.hpp"

using namespace chemoplan;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("default parameter bundle loads and validates") {
    model_params p = load_params("data/params_default.ini");
    CHECK(p.drugs.size() == 3);
    CHECK(p.drugs[0].name == "capecitabine");
    CHECK(p.drugs[1].name == "docetaxel");
    CHECK(p.drugs[2].name == "etoposide");
    CHECK(p.drugs[1].admin_route == route::intravenous);
    CHECK(p.drugs[1].rest_days.has_value());
    CHECK(*p.drugs[1].rest_days == 6);
    CHECK(p.drugs[2].beta_eff == doctest::Approx(0.5));
    CHECK(p.tumor.cell_types.size() == 4);
    CHECK(p.tumor.cell_types[0].resistant_to == -1);
    CHECK(p.tumor.cell_types[2].resistant_to == 1);
    CHECK(p.grid.horizon_days == 21);
    CHECK(p.regimens.size() == 3);
    CHECK_NOTHROW(validate(p));
}

TEST_CASE("parameter save/load round-trips bit-exactly") {
    model_params p = load_params("data/params_default.ini");
    const std::string path = temp_path("chemoplan_roundtrip.ini");
    save_params(p, path);
    model_params q = load_params(path);
    REQUIRE(q.drugs.size() == p.drugs.size());
    for (size_t d = 0; d < p.drugs.size(); ++d) {
        CHECK(q.drugs[d].name == p.drugs[d].name);
        CHECK(q.drugs[d].xi == p.drugs[d].xi);
        CHECK(q.drugs[d].eta0 == p.drugs[d].eta0);
        CHECK(q.drugs[d].eta_by_type == p.drugs[d].eta_by_type);
        CHECK(q.drugs[d].rho == p.drugs[d].rho);
        CHECK(q.drugs[d].beta_conc == p.drugs[d].beta_conc);
        CHECK(q.drugs[d].pill_mass == p.drugs[d].pill_mass);
    }
    CHECK(q.tumor.n0_by_type == p.tumor.n0_by_type);
    CHECK(q.wbc.beta_neu == p.wbc.beta_neu);
    CHECK(q.grid.meal_offsets == p.grid.meal_offsets);
    CHECK(q.regimens.size() == p.regimens.size());
    std::remove(path.c_str());
}

TEST_CASE("validation names the offending field") {
    model_params p = load_params("data/params_default.ini");
    SUBCASE("negative clearance") {
        p.drugs[0].xi = -1.0;
        CHECK_THROWS_AS(validate(p), param_error);
    }
    SUBCASE("kill-effect vector length mismatch") {
        p.drugs[0].eta_by_type.pop_back();
        CHECK_THROWS_AS(validate(p), param_error);
    }
    SUBCASE("oral drug without a pill size") {
        p.drugs[0].pill_mass.reset();
        CHECK_THROWS_AS(validate(p), param_error);
    }
    SUBCASE("zero white-cell count") {
        p.wbc.n_w0 = 0.0;
        CHECK_THROWS_AS(validate(p), param_error);
    }
    SUBCASE("fractions above one") {
        p.wbc.theta_neu = 1.5;
        CHECK_THROWS_AS(validate(p), param_error);
    }
}

TEST_CASE("toxicity floors imply the tighter white-cell bound") {
    wbc_params w;
    w.theta_neu = 0.5;
    w.theta_lym = 0.3;
    w.beta_neu = 2.5e12;
    w.beta_lym = 1e12;
    // neutrophils require 5e12 total, lymphocytes only 3.33e12; the shared
    // count bound is the smaller of the two
    CHECK(w.beta_w() == doctest::Approx(1e12 / 0.3).epsilon(1e-12));
    w.beta_neu = 1e12;
    CHECK(w.beta_w() == doctest::Approx(2e12).epsilon(1e-12));
}

TEST_CASE("meal offsets snap to the nearest grid point, ties earlier") {
    time_grid g;
    g.horizon_days = 2;
    g.meal_offsets = {8.0, 13.0, 19.0};

    SUBCASE("hourly grid keeps offsets exact") {
        g.step_hours = 1.0;
        CHECK(g.meal_steps_in_day() == std::vector<int>{8, 13, 19});
    }
    SUBCASE("four-hour grid rounds to nearest") {
        g.step_hours = 4.0;
        // 8h -> step 2 exactly; 13h -> 3.25 -> 3; 19h -> 4.75 -> 5
        CHECK(g.meal_steps_in_day() == std::vector<int>{2, 3, 5});
    }
    SUBCASE("six-hour grid rounds down the fractional offsets") {
        g.step_hours = 6.0;
        // 8h -> 1.33 -> 1; 13h -> 2.17 -> 2; 19h -> 3.17 -> 3
        CHECK(g.meal_steps_in_day() == std::vector<int>{1, 2, 3});
    }
    SUBCASE("exact midpoints resolve toward the earlier step") {
        g.step_hours = 4.0;
        g.meal_offsets = {10.0};  // 10h on a 4h grid sits exactly between steps 2 and 3
        CHECK(g.meal_steps_in_day() == std::vector<int>{2});
    }
    SUBCASE("meal steps repeat every day and respect the horizon") {
        g.step_hours = 4.0;
        auto steps = g.meal_steps();
        REQUIRE(steps.size() == 6);
        CHECK(steps[0] == 2);
        CHECK(steps[3] == 8);
        CHECK(g.is_meal_step(9));
        CHECK_FALSE(g.is_meal_step(4));
    }
}

TEST_CASE("diameter calibration: 1e9 cells is 25 mm and scales as a sphere") {
    CHECK(cells_to_diameter(1e9) == doctest::Approx(25.0).epsilon(1e-12));
    // volume scales linearly with count, diameter with its cube root
    CHECK(cells_to_diameter(8e9) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK_THROWS_AS(cells_to_diameter(0.0), param_error);
}

TEST_CASE("scenario CSV round-trip preserves order and values") {
    scenario_set set = load_scenarios("data/scenarios_default.csv");
    REQUIRE(set.scenarios.size() == 10);
    CHECK(set.type_names.size() == 4);
    CHECK(set.scenarios[0].prob == doctest::Approx(0.7705));
    CHECK(set.scenarios[0].log_pops[0] == doctest::Approx(20.53));
    // probabilities sorted descending and close to a full distribution
    double total = 0.0;
    for (size_t k = 0; k < set.scenarios.size(); ++k) {
        total += set.scenarios[k].prob;
        if (k > 0) CHECK(set.scenarios[k].prob <= set.scenarios[k - 1].prob);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(0.05));

    const std::string path = temp_path("chemoplan_scenarios.csv");
    save_scenarios(set, path);
    scenario_set again = load_scenarios(path);
    REQUIRE(again.scenarios.size() == set.scenarios.size());
    for (size_t k = 0; k < set.scenarios.size(); ++k) {
        CHECK(again.scenarios[k].prob == set.scenarios[k].prob);
        CHECK(again.scenarios[k].log_pops == set.scenarios[k].log_pops);
    }
    std::remove(path.c_str());
}

TEST_CASE("drug lookup by name") {
    model_params p = load_params("data/params_default.ini");
    CHECK(p.drug_by_name("docetaxel").id == 1);
    CHECK_THROWS_AS(p.drug_by_name("aspirin"), param_error);
}
