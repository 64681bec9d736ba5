#pragma once

// Solving layer: a built-in exact LP/branch-and-bound engine for micro
// instances and oracle tests, a brute-force enumeration oracle, and an
// external-solver path driven by a command template over MPS files.

#include <map>
#include <string>
#include <vector>

#include "chemoplan/milp.hpp"

namespace chemoplan {

class solver_error : public std::runtime_error {
  public:
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

enum class solve_status { optimal, infeasible, unbounded, limit };

std::string to_string(solve_status s);

struct solve_result {
    solve_status status = solve_status::limit;
    double objective = 0.0;                   // meaningful for optimal/limit-with-incumbent
    std::map<std::string, double> assignment;  // complete when status == optimal
    double gap = 0.0;                          // relative MIP gap if reported
    double runtime_seconds = 0.0;
    std::vector<std::string> violations;  // independent feasibility check findings
    std::string log;                      // backend diagnostics

    bool has_assignment() const { return !assignment.empty(); }
};

struct builtin_limits {
    long max_nodes = 1'000'000;
    long max_simplex_iterations = 20'000'000;  // across the whole solve
    int max_variables = 500;
    int max_integers = 60;
};

// Exact LP/MILP solve for micro instances: dense two-phase simplex with
// Bland's rule (1e-9 pivot tolerance) under depth-first branch-and-bound on
// the most-fractional integer variable, integrality tolerance 1e-6,
// absolute gap cutoff 1e-9. Incumbents are re-solved with all integers
// fixed to their rounded values so their numerics match the enumeration
// oracle. Throws solver_error when the size guard is exceeded; returns
// status limit when a node or iteration limit is hit.
solve_result solve_builtin(const milp_model& model, const builtin_limits& limits = {});

// Brute-force oracle: depth-first enumeration over all integer assignments
// in variable order, pruning a prefix only when its LP relaxation is
// already infeasible (which soundly excludes every completion), and solving
// the continuous LP at each complete integer assignment. Requires finite
// bounds on all integer variables. Exponential; test use only.
solve_result enumerate_exact(const milp_model& model, const builtin_limits& limits = {});

// Writes the model as MPS, substitutes {mps}, {sol}, and {time_limit} in
// the command template, runs it as a subprocess, and parses the solution
// file: one `name value` line per variable plus `=obj=` and `=status=`
// lines. Every claimed-optimal assignment passes through the independent
// feasibility checker; findings land in solve_result::violations.
// Throws solver_error on subprocess failure or unparseable output.
solve_result solve_external(const milp_model& model, const std::string& command_template,
                            double time_limit_seconds);

// Solution-file primitives shared by solve_external, tests, and the CLI.
void write_solution(const solve_result& result, const std::string& path);
solve_result parse_solution(const std::string& path);

// Default external-solver command template: the CHEMOPLAN_SOLVER_CMD
// environment variable if set, otherwise the bundled adapter script
// (tools/adapters/scipy_milp_solve.py) resolved relative to exe_dir.
std::string default_solver_command(const std::string& exe_dir);

}  // namespace chemoplan
