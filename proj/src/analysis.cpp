#include "chemoplan/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "chemoplan/calibration.hpp"
#include "chemoplan/dynamics.hpp"

namespace chemoplan {

namespace {

drug_params& mutable_drug(model_params& params, const std::string& name) {
    for (auto& d : params.drugs)
        if (d.name == name) return d;
    throw param_error("unknown drug: " + name);
}

// Pill-count levels scale conservatively toward the nearest step in the
// fraction's direction, and a prescribed drug never drops below one pill.
long long relevel(long long count, double fraction) {
    const double scaled = static_cast<double>(count) * fraction;
    if (fraction > 1.0) return static_cast<long long>(std::ceil(scaled - 1e-9));
    return std::max(1LL, static_cast<long long>(std::floor(scaled + 1e-9)));
}

// Peak concentration (g/m^3) of the drug's clinical regimen on an hourly
// grid, used to re-derive the concentration cap after a dose-level change.
double regimen_peak_concentration(const model_params& params, const drug_params& drug,
                                  const regimen_spec& trial) {
    time_grid grid;
    grid.horizon_days = trial.total_days();
    grid.step_hours = 1.0;
    grid.meal_offsets = trial.admin_hours;
    grid.wbc_lag_days = params.grid.wbc_lag_days;
    grid.compartment_volume = params.grid.compartment_volume;
    grid.body_surface = params.grid.body_surface;
    trajectory pk = simulate_pk(drug, regimen_doses(trial, grid), grid);
    return *std::max_element(pk.values.begin(), pk.values.end());
}

void apply_dose_level(model_params& params, const std::string& drug_name, double fraction) {
    auto& drug = mutable_drug(params, drug_name);
    auto it = params.regimens.find(drug_name);
    if (it == params.regimens.end())
        throw param_error("max-dose sweep needs a clinical regimen for " + drug_name);
    const regimen_spec base_trial = it->second;
    regimen_spec trial = base_trial;
    const double bsa = params.grid.body_surface;

    if (drug.is_oral()) {
        const double pill = *drug.pill_mass;
        const long long meal0 =
            static_cast<long long>(std::floor(drug.beta_rate * bsa / pill + 1e-9));
        const long long day0 =
            static_cast<long long>(std::floor(drug.beta_cum * bsa / pill + 1e-9));
        const long long meal1 = relevel(meal0, fraction);
        const long long day1 = relevel(day0, fraction);
        drug.beta_rate = static_cast<double>(meal1) * pill / bsa;
        drug.beta_cum = static_cast<double>(day1) * pill / bsa;
        trial.dose_per_admin *= static_cast<double>(meal1) / static_cast<double>(meal0);
    } else {
        drug.beta_rate *= fraction;
        drug.beta_cum *= fraction;
        trial.dose_per_admin *= fraction;
    }
    // the configured cap scales by the simulated peak-concentration ratio of
    // the re-leveled regimen to the base one, so the base level keeps the
    // configured cap unchanged
    const double base_peak = regimen_peak_concentration(params, drug, base_trial);
    const double new_peak = regimen_peak_concentration(params, drug, trial);
    drug.beta_conc *= new_peak / base_peak;
}

std::string sanitize_csv(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

std::string join_findings(const std::vector<std::string>& findings) {
    std::string out;
    for (const auto& f : findings) {
        if (!out.empty()) out += "; ";
        out += f;
    }
    return out;
}

// Everything the outcome comparison needs from one forward simulation.
struct sim_outcome {
    std::vector<trajectory> pk;
    std::vector<trajectory> pd;
    trajectory wbc;
    double objective = 0.0;  // sum over types of the final log burden
    double cells = 0.0;      // total final cell count
};

sim_outcome simulate_schedule(const model_params& params,
                              const std::vector<std::vector<double>>& doses) {
    const auto& grid = params.grid;
    const int S = grid.n_steps();
    const int M = grid.horizon_days;
    const int D = static_cast<int>(params.drugs.size());

    sim_outcome o;
    o.pk.resize(D);
    for (int d = 0; d < D; ++d) o.pk[d] = simulate_pk(params.drugs[d], doses[d], grid);
    o.pd = simulate_pd(params.tumor, params.drugs, o.pk, grid);
    std::vector<std::vector<double>> day_conc(D, std::vector<double>(M + 1, 0.0));
    for (int d = 0; d < D; ++d)
        for (int mm = 0; mm <= M; ++mm)
            day_conc[d][mm] = o.pk[d].values[grid.day_start_step(mm)];
    o.wbc = simulate_wbc(params.wbc, params.drugs, day_conc, M);
    for (const auto& t : o.pd) {
        o.objective += t.values[S];
        o.cells += std::exp(t.values[S]);
    }
    return o;
}

}  // namespace

std::string to_string(sweep_target target) {
    switch (target) {
        case sweep_target::clearance: return "clearance";
        case sweep_target::kill_effect: return "kill-effect";
        case sweep_target::wbc_kill_effect: return "wbc-kill-effect";
        case sweep_target::resistance_decay: return "resistance-decay";
        case sweep_target::neutropenia_threshold: return "neutropenia-threshold";
        case sweep_target::max_dose: return "max-dose";
    }
    return "unknown";
}

sweep_target sweep_target_from_string(const std::string& name) {
    for (sweep_target t : {sweep_target::clearance, sweep_target::kill_effect,
                           sweep_target::wbc_kill_effect, sweep_target::resistance_decay,
                           sweep_target::neutropenia_threshold, sweep_target::max_dose})
        if (to_string(t) == name) return t;
    throw param_error("unknown sweep target: " + name);
}

model_params scale_parameter(const model_params& base, sweep_target target,
                             const std::string& drug_name, double fraction) {
    if (!(fraction > 0.0)) throw param_error("sweep fractions must be positive");
    model_params params = base;
    if (fraction == 1.0) return params;
    switch (target) {
        case sweep_target::clearance: {
            auto& d = mutable_drug(params, drug_name);
            d.xi = std::min(d.xi * fraction, 1.0);
            break;
        }
        case sweep_target::kill_effect: {
            auto& d = mutable_drug(params, drug_name);
            d.eta0 *= fraction;
            for (auto& e : d.eta_by_type) e *= fraction;
            break;
        }
        case sweep_target::wbc_kill_effect: {
            auto& d = mutable_drug(params, drug_name);
            d.eta_wbc *= fraction;
            break;
        }
        case sweep_target::resistance_decay: {
            auto& d = mutable_drug(params, drug_name);
            d.rho *= fraction;
            break;
        }
        case sweep_target::neutropenia_threshold:
            params.wbc.beta_neu *= fraction;
            break;
        case sweep_target::max_dose:
            apply_dose_level(params, drug_name, fraction);
            break;
    }
    validate(params);
    return params;
}

solve_result run_backend(const milp_model& model, const solve_backend& backend) {
    if (backend.command.empty()) return solve_builtin(model, backend.limits);
    return solve_external(model, backend.command, backend.time_limit_seconds);
}

sweep_result sensitivity_sweep(const model_params& base, sweep_target target,
                               const std::string& drug_name,
                               const std::vector<double>& fractions,
                               const build_options& build, const solve_backend& backend) {
    if (fractions.empty()) throw param_error("a sweep needs at least one fraction");
    if (target != sweep_target::neutropenia_threshold)
        base.drug_by_name(drug_name);  // fail fast on a bad selector
    if (target == sweep_target::max_dose && base.regimens.find(drug_name) == base.regimens.end())
        throw param_error("max-dose sweep needs a clinical regimen for " + drug_name);

    sweep_result out;
    out.target = target;
    out.drug = target == sweep_target::neutropenia_threshold ? "" : drug_name;

    auto solve_point = [&base, target, &drug_name, &build, &backend](double fraction) {
        sweep_point pt;
        pt.fraction = fraction;
        try {
            model_params scaled = scale_parameter(base, target, drug_name, fraction);
            transcribed_model tm = build.scenarios ? build_chance_constrained(scaled, build)
                                                   : build_deterministic(scaled, build);
            solve_result r = run_backend(tm.milp, backend);
            pt.status = to_string(r.status);
            pt.gap = r.gap;
            pt.runtime_seconds = r.runtime_seconds;
            pt.solved = r.status == solve_status::optimal ||
                        (r.status == solve_status::limit && r.has_assignment());
            if (pt.solved) pt.objective = r.objective;
            pt.message = join_findings(r.violations);
        } catch (const std::exception& e) {
            pt.status = "error";
            pt.message = e.what();
            pt.solved = false;
        }
        return pt;
    };

    // points solve concurrently; results are gathered in input order
    std::vector<std::future<sweep_point>> futures;
    futures.reserve(fractions.size());
    for (double f : fractions) futures.push_back(std::async(std::launch::async, solve_point, f));
    for (auto& fut : futures) out.points.push_back(fut.get());
    return out;
}

void save_sweep_csv(const sweep_result& sweep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw param_error("cannot open " + path + " for writing");
    out << "target,drug,fraction,status,objective,gap,runtime_seconds,message\n";
    out << std::setprecision(12);
    for (const auto& pt : sweep.points) {
        out << to_string(sweep.target) << ',' << sweep.drug << ',' << pt.fraction << ','
            << pt.status << ',';
        if (pt.solved) out << pt.objective;
        out << ',' << pt.gap << ',' << pt.runtime_seconds << ',' << sanitize_csv(pt.message)
            << '\n';
    }
    if (!out) throw param_error("failed writing " + path);
}

regularization_result regularize_plan(const treatment_plan& plan, const model_params& params) {
    validate(params);
    const auto& grid = params.grid;
    const int S = grid.n_steps();
    const int M = grid.horizon_days;
    const int spd = grid.steps_per_day();
    const int D = static_cast<int>(params.drugs.size());
    if (static_cast<int>(plan.doses.size()) != D)
        throw param_error("plan covers " + std::to_string(plan.doses.size()) +
                          " drugs, parameters describe " + std::to_string(D));
    for (const auto& row : plan.doses)
        if (static_cast<int>(row.size()) != S + 1)
            throw param_error("plan dose rows need " + std::to_string(S + 1) + " entries");

    regularization_result res;
    auto doses = plan.doses;
    for (int d = 0; d < D; ++d) doses[d][S] = 0.0;

    const std::vector<int> offsets = grid.meal_steps_in_day();
    const int nmeals = static_cast<int>(offsets.size());
    for (int d = 0; d < D; ++d) {
        const auto& drug = params.drugs[d];
        if (!drug.is_oral()) continue;
        const double pill = *drug.pill_mass;

        // pill budget and induced rest days of the input plan
        long long total = 0;
        std::vector<char> active(M, 0);
        int n_active = 0;
        for (int mm = 0; mm < M; ++mm) {
            long long day_pills = 0;
            for (int s = mm * spd; s < (mm + 1) * spd; ++s) {
                const double count = doses[d][s] / pill;
                if (std::fabs(count - std::round(count)) > 1e-6)
                    throw param_error("plan dose of " + drug.name + " at step " +
                                      std::to_string(s) + " is not a whole pill count");
                day_pills += std::llround(count);
            }
            total += day_pills;
            if (day_pills > 0) {
                active[mm] = 1;
                ++n_active;
            }
        }
        for (int s = 0; s <= S; ++s) doses[d][s] = 0.0;
        if (n_active == 0) continue;

        // constant within-day pattern: even split, remainder to the earliest
        // meals, per-meal capacity respected by pushing overflow later
        const long long per_day = total / n_active;
        const long long cap =
            static_cast<long long>(std::floor(drug.beta_rate * grid.body_surface / pill + 1e-9));
        std::vector<long long> give(nmeals, 0);
        for (int i = 0; i < nmeals; ++i)
            give[i] = per_day / nmeals + (i < per_day % nmeals ? 1 : 0);
        long long carry = 0;
        for (int i = 0; i < nmeals; ++i) {
            const long long want = give[i] + carry;
            give[i] = std::min(cap, want);
            carry = want - give[i];
        }
        for (int i = 0; i < nmeals && carry > 0; ++i) {
            const long long extra = std::min(cap - give[i], carry);
            give[i] += extra;
            carry -= extra;
        }
        if (carry > 0)
            res.violations.push_back(drug.name + ": daily pill load exceeds meal capacity");
        for (int mm = 0; mm < M; ++mm) {
            if (!active[mm]) continue;
            for (int i = 0; i < nmeals; ++i)
                doses[d][mm * spd + offsets[i]] = static_cast<double>(give[i]) * pill;
        }
    }

    const sim_outcome before = simulate_schedule(params, plan.doses);
    const sim_outcome after = simulate_schedule(params, doses);
    res.optimal_objective = before.objective;
    res.regulated_objective = after.objective;
    res.optimal_diameter_mm = cells_to_diameter(before.cells);
    res.regulated_diameter_mm = cells_to_diameter(after.cells);

    // toxicity re-check on the regulated trajectories
    for (int mm = 0; mm <= M; ++mm) {
        const double count = after.wbc.values[mm];
        if (params.wbc.theta_neu * count < params.wbc.beta_neu * (1.0 - 1e-12)) {
            std::ostringstream os;
            os << "neutropenia: day " << mm << " count " << params.wbc.theta_neu * count
               << " falls below " << params.wbc.beta_neu;
            res.violations.push_back(os.str());
        }
        if (params.wbc.theta_lym * count < params.wbc.beta_lym * (1.0 - 1e-12)) {
            std::ostringstream os;
            os << "lymphocytopenia: day " << mm << " count " << params.wbc.theta_lym * count
               << " falls below " << params.wbc.beta_lym;
            res.violations.push_back(os.str());
        }
    }

    // independent audit against the full constraint set
    build_options audit;
    audit.bilinear = bilinear_mode::mccormick;
    transcribed_model tm = build_deterministic(params, audit);
    const auto assignment = assignment_from_doses(tm, doses);
    for (auto& finding : check_feasibility(tm.milp, assignment)) {
        // count bounds are already reported as toxicity findings above
        if (finding.find("NW_") != std::string::npos ||
            finding.find("NNEU_") != std::string::npos ||
            finding.find("NLYM_") != std::string::npos)
            continue;
        res.violations.push_back(finding);
    }
    res.accepted = res.violations.empty();

    // package the regulated schedule with its re-simulated trajectories
    res.regulated.doses = doses;
    res.regulated.pills.assign(D, std::vector<int>(S + 1, 0));
    res.regulated.concentrations.assign(D, std::vector<double>(S + 1, 0.0));
    for (int d = 0; d < D; ++d) {
        for (int s = 0; s <= S; ++s) res.regulated.concentrations[d][s] = after.pk[d].values[s];
        if (params.drugs[d].is_oral())
            for (int s = 0; s <= S; ++s)
                res.regulated.pills[d][s] =
                    static_cast<int>(std::llround(doses[d][s] / *params.drugs[d].pill_mass));
    }
    const int Q = static_cast<int>(params.tumor.cell_types.size());
    res.regulated.log_burden.assign(Q, std::vector<double>(S + 1, 0.0));
    for (int q = 0; q < Q; ++q) res.regulated.log_burden[q] = after.pd[q].values;
    res.regulated.white_cells = after.wbc.values;
    res.regulated.neutrophils.resize(S + 1);
    res.regulated.lymphocytes.resize(S + 1);
    for (int s = 0; s <= S; ++s) {
        const double count = after.wbc.values[grid.day_of_step(s)];
        res.regulated.neutrophils[s] = params.wbc.theta_neu * count;
        res.regulated.lymphocytes[s] = params.wbc.theta_lym * count;
    }
    res.regulated.objective = after.objective;
    return res;
}

std::vector<comparison_row> compare_configurations(const model_params& base,
                                                   const std::vector<comparison_config>& configs,
                                                   const solve_backend& backend) {
    std::vector<comparison_row> rows;
    for (const auto& cfg : configs) {
        comparison_row row;
        row.step_hours = cfg.step_hours;
        row.bilinear = cfg.bilinear == bilinear_mode::mccormick ? "mccormick" : "discrete";
        row.wbc_levels = cfg.bilinear == bilinear_mode::mccormick ? 0 : cfg.wbc_levels;
        {
            std::ostringstream os;
            os << 'h' << std::llround(cfg.step_hours * 60.0) << "min_" << row.bilinear;
            if (cfg.bilinear == bilinear_mode::discrete) os << cfg.wbc_levels;
            row.label = os.str();
        }
        try {
            model_params params = base;
            params.grid.step_hours = cfg.step_hours;
            build_options opts;
            opts.bilinear = cfg.bilinear;
            opts.wbc_levels = cfg.wbc_levels;
            transcribed_model tm = build_deterministic(params, opts);
            row.n_vars = tm.milp.n_vars();
            row.n_rows = tm.milp.n_rows();
            row.n_integer = tm.milp.n_integer();
            row.n_binary = tm.milp.n_binary();
            solve_result r = run_backend(tm.milp, backend);
            row.status = to_string(r.status);
            row.gap = r.gap;
            row.runtime_seconds = r.runtime_seconds;
            row.solved = r.status == solve_status::optimal ||
                         (r.status == solve_status::limit && r.has_assignment());
            if (row.solved) row.objective = r.objective;
            row.message = join_findings(r.violations);
        } catch (const std::exception& e) {
            row.status = "error";
            row.message = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void save_comparison_csv(const std::vector<comparison_row>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw param_error("cannot open " + path + " for writing");
    out << "label,step_hours,bilinear,wbc_levels,status,objective,gap,runtime_seconds,"
           "n_vars,n_rows,n_integer,n_binary,message\n";
    out << std::setprecision(12);
    for (const auto& row : rows) {
        out << row.label << ',' << row.step_hours << ',' << row.bilinear << ',' << row.wbc_levels
            << ',' << row.status << ',';
        if (row.solved) out << row.objective;
        out << ',' << row.gap << ',' << row.runtime_seconds << ',' << row.n_vars << ','
            << row.n_rows << ',' << row.n_integer << ',' << row.n_binary << ','
            << sanitize_csv(row.message) << '\n';
    }
    if (!out) throw param_error("failed writing " + path);
}

}  // namespace chemoplan
