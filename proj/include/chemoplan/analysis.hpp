#pragma once

// Experiment orchestration on top of the planning models: one-parameter
// sensitivity sweeps, conversion of optimal pill schedules into regular
// administration patterns, and discretization/linearization comparison
// tables.

#include <string>
#include <vector>

#include "chemoplan/domain.hpp"
#include "chemoplan/solver.hpp"
#include "chemoplan/transcription.hpp"

namespace chemoplan {

// Which parameter a sweep scales. Per-drug selectors need a drug name; the
// neutropenia threshold is global.
enum class sweep_target {
    clearance,              // elimination rate xi, capped at 1.0/day
    kill_effect,            // tumor kill eta_{d,0}, per-type ratios preserved
    wbc_kill_effect,        // white-cell kill eta_{d,w}
    resistance_decay,       // kill-decay rate rho
    neutropenia_threshold,  // toxicity floor beta_neu only
    max_dose,               // administration level (pills or infusion rates)
};

std::string to_string(sweep_target target);
sweep_target sweep_target_from_string(const std::string& name);

// Returns a copy of base with one parameter scaled by fraction.
// Conventions: fraction 1.0 returns base unchanged; the clearance rate is
// capped at the physical limit 1.0/day; kill_effect scales every per-type
// kill entry so derived resistance ratios survive; max_dose on a pill drug
// re-levels the pattern (per-meal and per-day pill counts scale by the
// fraction, ceiling above one, floor below, never under one pill) while on
// an infusion drug the rate and daily caps scale directly, and in both
// cases the concentration cap is re-derived from the peak concentration of
// the drug's clinical regimen simulated at the new level.
model_params scale_parameter(const model_params& base, sweep_target target,
                             const std::string& drug_name, double fraction);

// How sweep points and comparison rows are solved: an external command
// template when given, the built-in branch-and-bound engine otherwise.
struct solve_backend {
    std::string command;  // template with {mps}/{sol}/{time_limit}; empty = builtin
    double time_limit_seconds = 900.0;
    builtin_limits limits;  // built-in engine guards
};

solve_result run_backend(const milp_model& model, const solve_backend& backend);

struct sweep_point {
    double fraction = 1.0;
    std::string status;  // solver status, or "error" when the point failed
    double objective = 0.0;
    double gap = 0.0;
    double runtime_seconds = 0.0;
    std::string message;  // failure detail or feasibility findings
    bool solved = false;  // objective field is meaningful
};

struct sweep_result {
    sweep_target target = sweep_target::clearance;
    std::string drug;  // empty for the neutropenia threshold
    std::vector<sweep_point> points;
};

// One deterministic build-and-solve per fraction, only the selected
// parameter scaled. Points run concurrently and are reported in input
// order; any per-point failure is recorded in its row and the sweep
// continues.
sweep_result sensitivity_sweep(const model_params& base, sweep_target target,
                               const std::string& drug_name,
                               const std::vector<double>& fractions,
                               const build_options& build, const solve_backend& backend);

void save_sweep_csv(const sweep_result& sweep, const std::string& path);

// Outcome of converting an optimal schedule into a regular one.
struct regularization_result {
    treatment_plan regulated;  // re-simulated trajectories for the regular plan
    double optimal_objective = 0.0;  // sum of final log burdens, input plan
    double regulated_objective = 0.0;
    double optimal_diameter_mm = 0.0;  // spherical diameter of the total count
    double regulated_diameter_mm = 0.0;
    bool accepted = false;                 // no toxicity or operational finding
    std::vector<std::string> violations;   // findings, never silently fixed

    double diameter_delta_mm() const { return regulated_diameter_mm - optimal_diameter_mm; }
};

// Replaces each oral drug's schedule with a constant per-day meal pattern:
// the plan's total pill count is spread evenly over its non-rest days
// (round-down, remainder dropped, remainder pills of a day going to the
// earliest meals), days the plan left drug-free stay drug-free, and
// intravenous schedules are kept. The regulated schedule is re-simulated
// and audited against the full constraint set via assignment_from_doses;
// toxicity findings mark the result rejected.
regularization_result regularize_plan(const treatment_plan& plan, const model_params& params);

// One row of the configuration comparison table.
struct comparison_config {
    double step_hours = 4.0;
    bilinear_mode bilinear = bilinear_mode::discrete;
    int wbc_levels = 20;
};

struct comparison_row {
    std::string label;
    double step_hours = 0.0;
    std::string bilinear;
    int wbc_levels = 0;
    std::string status;
    double objective = 0.0;
    double gap = 0.0;
    double runtime_seconds = 0.0;
    int n_vars = 0;
    int n_rows = 0;
    int n_integer = 0;
    int n_binary = 0;
    std::string message;
    bool solved = false;
};

// Builds and solves the deterministic model once per configuration.
// Failures are recorded per row.
std::vector<comparison_row> compare_configurations(const model_params& base,
                                                   const std::vector<comparison_config>& configs,
                                                   const solve_backend& backend);

void save_comparison_csv(const std::vector<comparison_row>& rows, const std::string& path);

}  // namespace chemoplan
