#pragma once

// Core data model shared by every other module: drug PK/PD and operational
// parameters, tumor growth parameters, white blood cell dynamics, the
// discretization grid, tumor-composition scenarios, and clinical regimen
// descriptions. Parameters load from an INI-style file with one [section]
// per entity; see data/params_default.ini for the documented format.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chemoplan {

// Thrown for parameter-file syntax errors (with file:line context) and for
// invariant violations (naming the offending field).
class param_error : public std::runtime_error {
  public:
    explicit param_error(const std::string& what) : std::runtime_error(what) {}
};

enum class route { oral, intravenous };

std::string to_string(route r);

struct drug_params {
    int id = 0;                       // column/index order in the model
    std::string name;
    route admin_route = route::oral;
    double xi = 0.0;                  // elimination rate, 1/day
    double eta0 = 0.0;                // kill effect on non-resistant cells, m^3/(g day)
    std::vector<double> eta_by_type;  // kill effect per cancer cell type, m^3/(g day)
    double eta_wbc = 0.0;             // kill effect on white blood cells, m^3/(g day)
    double rho = 0.0;                 // temporal resistance decay, 1/day
    double beta_eff = 0.0;            // effectiveness threshold, g/m^3
    double beta_conc = 0.0;           // max drug mass in the compartment, g (bound on C is beta_conc/volume)
    double beta_rate = 0.0;           // oral: g/m^2 per administration; IV: g/m^2 per hour
    double beta_cum = 0.0;            // max daily cumulative dose, g/m^2
    std::optional<double> pill_mass;  // oral pill size, g
    std::optional<int> rest_days;     // mandated consecutive rest days after an administration day (IV)

    bool is_oral() const { return admin_route == route::oral; }
};

struct cell_type {
    std::string name;          // the name of the drug the type resists, or any other label
    int resistant_to = -1;     // drug id, or -1 for the non-resistant type
};

struct tumor_params {
    std::vector<cell_type> cell_types;
    std::vector<double> n0_by_type;    // initial populations, cells
    std::vector<double> n_inf_by_type; // asymptotic limits, cells
    double lambda = 0.0;               // Gompertz shape, 1/day
};

struct wbc_params {
    double n_w0 = 0.0;        // initial white blood cell count, cells/m^3
    double production = 0.0;  // upsilon_w, cells/(m^3 day)
    double turnover = 0.0;    // nu_w, 1/day
    int delay_days = 0;       // toxicity response delay, days
    double theta_neu = 0.0;   // neutrophil fraction of the WBC count
    double theta_lym = 0.0;   // lymphocyte fraction
    double beta_neu = 0.0;    // neutropenia threshold, cells/m^3
    double beta_lym = 0.0;    // lymphocytopenia threshold, cells/m^3

    // Lower bound on the total WBC count implied by the two toxicity floors.
    double beta_w() const;
};

struct time_grid {
    int horizon_days = 21;               // M
    double step_hours = 1.0;             // h, hours
    std::vector<double> meal_offsets;    // within-day administration hours
    int wbc_lag_days = 5;                // tau, days
    double compartment_volume = 0.015;   // m^3
    double body_surface = 1.7;           // m^2

    double step_days() const { return step_hours / 24.0; }
    int steps_per_day() const { return static_cast<int>(24.0 / step_hours + 0.5); }
    int n_steps() const { return horizon_days * steps_per_day(); }  // S; grid points are 0..S
    double t_days(int s) const { return s * step_days(); }
    int day_of_step(int s) const { return s / steps_per_day(); }    // 0-based day index
    int day_start_step(int day) const { return day * steps_per_day(); }

    // Meal steps of one day, as within-day step offsets. Offsets that do not
    // fall on the grid snap to the nearest grid point (ties toward earlier).
    std::vector<int> meal_steps_in_day() const;
    // All meal steps over the horizon, ascending.
    std::vector<int> meal_steps() const;
    bool is_meal_step(int s) const;
};

struct scenario {
    std::vector<double> log_pops;  // per-type log cell populations
    double prob = 0.0;
};

struct scenario_set {
    std::vector<std::string> type_names;
    std::vector<scenario> scenarios;  // sorted by prob descending

    int n_types() const { return scenarios.empty() ? 0 : static_cast<int>(scenarios.front().log_pops.size()); }
};

struct regimen_spec {
    std::string drug;                // drug name this regimen administers
    double dose_per_admin = 0.0;     // g/m^2 per administration
    std::vector<double> admin_hours; // within-day administration hours on on-days
    int days_on = 0;                 // leading days of each cycle with administrations
    int days_rest = 0;               // trailing rest days of each cycle
    int cycles = 0;
    double prr = 0.0;                // target partial response rate

    int cycle_days() const { return days_on + days_rest; }
    int total_days() const { return cycles * cycle_days(); }
};

struct model_params {
    std::vector<drug_params> drugs;
    tumor_params tumor;
    wbc_params wbc;
    time_grid grid;
    std::map<std::string, regimen_spec> regimens;

    const drug_params& drug_by_name(const std::string& name) const;
};

// Validates every type invariant; throws param_error naming the field otherwise.
void validate(const model_params& params);

// Loads and validates a parameter bundle from the documented INI-style format.
model_params load_params(const std::string& path);

// Writes a bundle in the same format; load_params(save_params(p)) round-trips
// bit-exactly (doubles serialized with max_digits10).
void save_params(const model_params& params, const std::string& path);

// Tumor diameter in millimeters for a spherical mass of n cells, calibrated
// so that 1e9 cells corresponds to 25 mm.
double cells_to_diameter(double cells);

// Scenario CSV: one row per scenario, per-type log-population columns then
// probability. Header row mandatory.
scenario_set load_scenarios(const std::string& path);
void save_scenarios(const scenario_set& set, const std::string& path);

}  // namespace chemoplan
