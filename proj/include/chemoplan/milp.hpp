#pragma once

// Mixed-integer linear program representation shared by the model builders
// and the solving layer: named variables with bounds and integrality, named
// linear constraints, and a minimization objective.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace chemoplan {

class milp_error : public std::runtime_error {
  public:
    explicit milp_error(const std::string& what) : std::runtime_error(what) {}
};

enum class var_kind { continuous, integer, binary };
enum class row_sense { le, eq, ge };

constexpr double milp_inf = 1e30;  // bounds at or beyond this magnitude mean unbounded

struct lin_term {
    int col = 0;
    double coef = 0.0;
};

struct milp_var {
    std::string name;
    var_kind kind = var_kind::continuous;
    double lower = 0.0;
    double upper = milp_inf;
};

struct milp_row {
    std::string name;
    std::vector<lin_term> terms;
    row_sense sense = row_sense::le;
    double rhs = 0.0;
};

// Objective is always minimization; build a maximization by negating terms.
struct milp_model {
    std::string name = "model";
    std::vector<milp_var> variables;
    std::vector<milp_row> constraints;
    std::vector<lin_term> objective;
    std::map<std::string, int> var_index;

    int add_var(const std::string& name, var_kind kind, double lower, double upper);
    void add_row(const std::string& name, std::vector<lin_term> terms, row_sense sense,
                 double rhs);
    void add_objective_term(int col, double coef);

    int n_vars() const { return static_cast<int>(variables.size()); }
    int n_rows() const { return static_cast<int>(constraints.size()); }
    int n_integer() const;  // integer + binary
    int n_binary() const;

    // Verifies the representation invariants: unique names, lower <= upper,
    // every term referencing an existing column, binaries within [0,1].
    void check() const;
};

// Canonical free-format MPS export with ROWS/COLUMNS/RHS/BOUNDS sections,
// INTORG/INTEND markers around integer columns, and explicit bounds for
// every integer variable. Column order follows the model's variable order,
// so the output is deterministic and round-trips through parse_mps.
void write_mps(const milp_model& model, const std::string& path);

// Parses the free-format MPS dialect written by write_mps (a standard
// subset: N/L/G/E rows, two-pair COLUMNS lines, RHS, RANGES, and
// LO/UP/BV/LI/UI/FR/MI/PL bounds).
milp_model parse_mps(const std::string& path);

// Independent feasibility check of an assignment: every constraint within
// tol absolute, every bound within tol, every integer variable within
// int_tol of an integer. Returns human-readable violation descriptions
// (empty when feasible).
std::vector<std::string> check_feasibility(const milp_model& model,
                                           const std::map<std::string, double>& assignment,
                                           double tol = 1e-6, double int_tol = 1e-6);

// Objective value of an assignment (missing variables treated as an error).
double objective_value(const milp_model& model, const std::map<std::string, double>& assignment);

}  // namespace chemoplan
