#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "chemoplan/milp.hpp"
#include "chemoplan/solver.hpp"

using namespace chemoplan;

TEST_CASE("simplex solves a pure LP at the right vertex") {
    milp_model m;
    int x = m.add_var("x", var_kind::continuous, 0.0, 4.0);
    int y = m.add_var("y", var_kind::continuous, 0.0, 2.5);
    m.add_row("cap", {{x, 1.0}, {y, 1.0}}, row_sense::le, 3.0);
    m.add_objective_term(x, -1.0);
    m.add_objective_term(y, -2.0);

    solve_result res = solve_builtin(m);
    REQUIRE(res.status == solve_status::optimal);
    CHECK(res.objective == doctest::Approx(-5.5).epsilon(1e-9));
    CHECK(res.assignment.at("y") == doctest::Approx(2.5));
    CHECK(res.assignment.at("x") == doctest::Approx(0.5));
    CHECK(res.violations.empty());
}

TEST_CASE("branch and bound closes the integrality gap") {
    milp_model m;
    int x = m.add_var("x", var_kind::integer, 0.0, 4.0);
    int y = m.add_var("y", var_kind::continuous, 0.0, 2.5);
    m.add_row("cap", {{x, 1.0}, {y, 1.0}}, row_sense::le, 3.0);
    m.add_objective_term(x, -1.0);
    m.add_objective_term(y, -2.0);

    solve_result res = solve_builtin(m);
    REQUIRE(res.status == solve_status::optimal);
    CHECK(res.objective == doctest::Approx(-5.0).epsilon(1e-9));
    const double xv = res.assignment.at("x");
    CHECK(std::abs(xv - std::llround(xv)) < 1e-9);
}

TEST_CASE("knapsack agrees with enumeration") {
    // max 10a + 13b + 7c + 9d with 3a + 4b + 2c + 3d <= 6
    milp_model m;
    const double values[] = {10.0, 13.0, 7.0, 9.0};
    const double weights[] = {3.0, 4.0, 2.0, 3.0};
    std::vector<lin_term> row;
    for (int i = 0; i < 4; ++i) {
        int col = m.add_var("item" + std::to_string(i), var_kind::binary, 0.0, 1.0);
        row.push_back({col, weights[i]});
        m.add_objective_term(col, -values[i]);
    }
    m.add_row("weight", row, row_sense::le, 6.0);

    solve_result bb = solve_builtin(m);
    solve_result ex = enumerate_exact(m);
    REQUIRE(bb.status == solve_status::optimal);
    REQUIRE(ex.status == solve_status::optimal);
    CHECK(bb.objective == doctest::Approx(ex.objective).epsilon(1e-12));
    CHECK(bb.objective == doctest::Approx(-20.0));  // items 1 and 3
}

TEST_CASE("infeasible and unbounded models are classified") {
    SUBCASE("infeasible") {
        milp_model m;
        int x = m.add_var("x", var_kind::continuous, 0.0, 10.0);
        m.add_row("lo", {{x, 1.0}}, row_sense::ge, 2.0);
        m.add_row("hi", {{x, 1.0}}, row_sense::le, 1.0);
        CHECK(solve_builtin(m).status == solve_status::infeasible);
    }
    SUBCASE("integer infeasible") {
        milp_model m;
        int x = m.add_var("x", var_kind::integer, 0.0, 5.0);
        m.add_row("lo", {{x, 2.0}}, row_sense::ge, 1.0);
        m.add_row("hi", {{x, 2.0}}, row_sense::le, 1.9);
        CHECK(solve_builtin(m).status == solve_status::infeasible);
        CHECK(enumerate_exact(m).status == solve_status::infeasible);
    }
    SUBCASE("unbounded") {
        milp_model m;
        int x = m.add_var("x", var_kind::continuous, 0.0, milp_inf);
        m.add_row("lo", {{x, 1.0}}, row_sense::ge, 0.0);
        m.add_objective_term(x, -1.0);
        CHECK(solve_builtin(m).status == solve_status::unbounded);
    }
}

TEST_CASE("equality rows and negative bounds work through both engines") {
    milp_model m;
    int x = m.add_var("x", var_kind::integer, -3.0, 3.0);
    int y = m.add_var("y", var_kind::continuous, -5.0, 5.0);
    m.add_row("tie", {{x, 1.0}, {y, 1.0}}, row_sense::eq, 1.5);
    m.add_objective_term(x, 1.0);
    m.add_objective_term(y, 2.0);

    solve_result bb = solve_builtin(m);
    solve_result ex = enumerate_exact(m);
    REQUIRE(bb.status == solve_status::optimal);
    REQUIRE(ex.status == solve_status::optimal);
    // put x as high as possible so the expensive y absorbs the rest
    CHECK(bb.objective == doctest::Approx(3.0 + 2.0 * -1.5).epsilon(1e-9));
    CHECK(bb.objective == doctest::Approx(ex.objective).epsilon(1e-9));
}

TEST_CASE("size limits guard the dense engine") {
    milp_model m;
    builtin_limits limits;
    limits.max_variables = 10;
    for (int i = 0; i < 11; ++i) m.add_var("v" + std::to_string(i), var_kind::continuous, 0.0, 1.0);
    CHECK_THROWS_AS(solve_builtin(m, limits), solver_error);

    milp_model ints;
    builtin_limits int_limits;
    int_limits.max_integers = 3;
    for (int i = 0; i < 4; ++i) ints.add_var("b" + std::to_string(i), var_kind::binary, 0.0, 1.0);
    CHECK_THROWS_AS(solve_builtin(ints, int_limits), solver_error);
}

TEST_CASE("solution files round-trip status, objective, gap, and assignment") {
    solve_result res;
    res.status = solve_status::optimal;
    res.objective = -20.25;
    res.gap = 1e-4;
    res.assignment = {{"alpha", 1.0}, {"beta", 0.0}, {"gamma", 2.5}};
    const std::string path = "chemoplan_solution_roundtrip.sol";
    write_solution(res, path);
    solve_result back = parse_solution(path);
    CHECK(back.status == res.status);
    CHECK(back.objective == doctest::Approx(res.objective));
    CHECK(back.gap == doctest::Approx(res.gap));
    REQUIRE(back.assignment.size() == res.assignment.size());
    for (const auto& [name, value] : res.assignment)
        CHECK(back.assignment.at(name) == doctest::Approx(value));
    std::remove(path.c_str());
}

TEST_CASE("default solver command honors the environment override") {
    setenv("CHEMOPLAN_SOLVER_CMD", "mysolver {mps} {sol}", 1);
    CHECK(default_solver_command(".") == "mysolver {mps} {sol}");
    unsetenv("CHEMOPLAN_SOLVER_CMD");
    // without the override the command either points at the bundled adapter
    // or is empty when no adapter is installed
    const std::string cmd = default_solver_command(".");
    if (!cmd.empty()) {
        CHECK(cmd.find("{mps}") != std::string::npos);
        CHECK(cmd.find("{sol}") != std::string::npos);
    }
}
