#pragma once

// Transcribes the chemotherapy planning problem (pharmacokinetics,
// log-tumor-burden dynamics, white-blood-cell toxicity with a linearized
// bilinear kill term, and operational dosing rules) into a mixed-integer
// linear program over a uniform time grid.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chemoplan/domain.hpp"
#include "chemoplan/milp.hpp"

namespace chemoplan {

// How the product N_w * C (white-cell count times delayed concentration) is
// linearized: McCormick envelopes over the variable boxes, or an exact-on-grid
// discretization of the count into K uniform levels with SOS1-style binaries.
enum class bilinear_mode { mccormick, discrete };

// Objective used by the chance-constrained build: expected log burden under
// the most likely scenario (shrinkage), or maximizing the covered probability
// of reaching the surgical threshold (probability).
enum class objective_mode { shrinkage, probability };

struct build_options {
    bilinear_mode bilinear = bilinear_mode::discrete;
    // number of discrete white-cell levels K; the level width is
    // (n_w0 - beta_w) / K so the ladder spans the admissible count range
    int wbc_levels = 20;
    objective_mode objective = objective_mode::shrinkage;
    // scenario data for the chance-constrained build
    std::optional<scenario_set> scenarios;
    // permitted probability of missing the surgical threshold
    double epsilon = 0.05;
    // total tumor cell count that makes surgery viable
    double n_surg = 0.4e9;
    // count-valued variables (white cells and their products) are expressed
    // in units of this many cells/m^3 to keep coefficients well scaled
    double wbc_scale = 1e12;
};

// A transcribed model plus the context needed to interpret solutions.
struct transcribed_model {
    milp_model milp;
    model_params params;
    build_options options;
    int n_scenarios = 0;  // 0 for the deterministic build
    // initial log populations per cell type; for the stochastic build this
    // holds scenario 1 (the most likely one)
    std::vector<double> initial_log_pops;
};

// A dosing schedule recovered from a MILP solution, with the state
// trajectories re-simulated from the doses as an independent consistency
// check against the model's own state variables.
struct treatment_plan {
    // doses[d][s] = administered mass (g) of drug d at step s, s in 0..S
    std::vector<std::vector<double>> doses;
    // pills[d][s] = pill count for oral drugs (0 for intravenous ones)
    std::vector<std::vector<int>> pills;
    // model state values, unscaled: concentrations[d][s] (g/m^3),
    // log_burden[q][s], white_cells[m] (cells/m^3, day grid),
    // neutrophils[s]/lymphocytes[s] (cells/m^3, step grid)
    std::vector<std::vector<double>> concentrations;
    std::vector<std::vector<double>> log_burden;
    std::vector<double> white_cells;
    std::vector<double> neutrophils;
    std::vector<double> lymphocytes;
    double objective = 0.0;
    // largest absolute gap between model state values and re-simulation
    double max_concentration_error = 0.0;
    double max_log_burden_error = 0.0;
    // white-cell gap is reported separately: the linearization is only
    // approximate, so this is a diagnostic rather than a hard check
    double max_white_cell_error = 0.0;
    // chance-constrained builds: flags and log burdens per scenario
    std::vector<bool> scenario_selected;
    std::vector<std::vector<std::vector<double>>> scenario_log_burden;
    double covered_probability = 0.0;
};

// Builds the deterministic plan-optimization MILP. Throws milp_error when the
// grid step is unstable for any kinetic rate or the tumor drift, or when the
// discrete white-cell ladder cannot span the admissible range.
transcribed_model build_deterministic(const model_params& params,
                                      const build_options& options);

// Builds the chance-constrained variant over options.scenarios: one
// log-burden trajectory per scenario sharing the dosing and toxicity
// variables, big-M surgical-threshold rows per scenario and cell type, and a
// probability knapsack requiring selected scenarios to cover 1 - epsilon.
transcribed_model build_chance_constrained(const model_params& params,
                                           const build_options& options);

// Recovers the dosing schedule and state trajectories from a solution.
// Throws milp_error when variables are missing, integrality is violated
// beyond 1e-6, or an oral dose is not a pill multiple at a meal step.
treatment_plan extract_plan(const transcribed_model& model,
                            const std::map<std::string, double>& solution);

// The inverse direction: builds a complete variable assignment for a
// deterministic McCormick-mode transcription by simulating the dynamics a
// dose schedule implies (doses[d][s] in grams, s in 0..S with the final
// entry zero). Because the envelope relaxation contains the exact product,
// the assignment satisfies every model row up to roundoff whenever the
// schedule respects the operational limits, so feeding the result to
// check_feasibility audits an arbitrary schedule against the full
// constraint set. Throws milp_error for chance-constrained or
// discrete-mode models and for oral doses that are not whole pills at
// meal steps.
std::map<std::string, double> assignment_from_doses(
    const transcribed_model& model, const std::vector<std::vector<double>>& doses);

// Writes a human-readable listing of the model (variables with bounds and
// kinds, then rows) for debugging.
void write_model_listing(const milp_model& model, const std::string& path);

}  // namespace chemoplan
