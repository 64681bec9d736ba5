#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "chemoplan/domain.hpp"
#include "chemoplan/validation.hpp"

using namespace chemoplan;

TEST_CASE("the planning fixture is a valid parameter bundle") {
    model_params p = micro_instance();
    CHECK_NOTHROW(validate(p));
    CHECK(p.drugs.size() == 1);
    CHECK(p.grid.n_steps() == 8);
    CHECK(p.regimens.count("orapill") == 1);
}

TEST_CASE("stability guards hold on the shipped parameters") {
    property_report rep = check_stability_guards(load_params("data/params_default.ini"));
    CHECK(rep.passed);
    CHECK_FALSE(rep.detail.empty());
}

TEST_CASE("Euler stays within the analytic bound and halves with the step") {
    property_report rep = check_euler_error_bound(load_params("data/params_default.ini"));
    CHECK(rep.passed);
}

TEST_CASE("stronger schedules never leave more cells behind") {
    model_params p = load_params("data/params_default.ini");
    property_report rep = check_dominance(p, 2024, 50);
    CHECK(rep.passed);
}

TEST_CASE("branch and bound matches enumeration on random micro models") {
    property_report rep = check_oracle_equivalence(2024, 20);
    CHECK(rep.passed);
}

TEST_CASE("simulated branching mean sits within three standard errors") {
    property_report rep = check_branching_mean(2024, 3000);
    CHECK(rep.passed);
}

TEST_CASE("the full suite runs and reports five named properties") {
    model_params p = load_params("data/params_default.ini");
    auto reports = run_property_suites(p, 7);
    REQUIRE(reports.size() == 5);
    CHECK(reports[0].name == "stability");
    CHECK(reports[1].name == "euler-error-bound");
    CHECK(reports[2].name == "dominance");
    CHECK(reports[3].name == "oracle-equivalence");
    CHECK(reports[4].name == "branching-mean");
    for (const auto& r : reports) {
        CAPTURE(r.name);
        CAPTURE(r.detail);
        CHECK(r.passed);
    }
}
