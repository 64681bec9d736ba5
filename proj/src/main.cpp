// Command-line front end for the treatment-planning toolkit. Subcommands
// cover forward simulation, scenario generation, kill-effect calibration,
// model building and solving, sensitivity sweeps, plan regularization, and
// the seeded property suites. Exit codes: 0 success, 1 failure, 2 infeasible
// model (solve) or rejected plan (regularize).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chemoplan/analysis.hpp"
#include "chemoplan/calibration.hpp"
#include "chemoplan/domain.hpp"
#include "chemoplan/dynamics.hpp"
#include "chemoplan/milp.hpp"
#include "chemoplan/scenarios.hpp"
#include "chemoplan/solver.hpp"
#include "chemoplan/transcription.hpp"
#include "chemoplan/validation.hpp"

namespace fs = std::filesystem;
using namespace chemoplan;

namespace {

std::string exe_dir() {
    std::error_code ec;
    fs::path self = fs::read_symlink("/proc/self/exe", ec);
    if (ec) return fs::current_path().string();
    return self.parent_path().string();
}

// Finds a bundled data file next to the executable (or the source tree when
// run from a build directory).
std::string resolve_data_file(const std::string& rel) {
    const std::string exe = exe_dir();
    for (const auto& base : {exe + "/..", exe + "/../..", std::string("."), std::string("..")}) {
        fs::path cand = fs::path(base) / rel;
        std::error_code ec;
        if (fs::exists(cand, ec)) return fs::weakly_canonical(cand).string();
    }
    return "";
}

model_params load_params_or_die(const std::string& params_path) {
    std::string path = params_path;
    if (path.empty()) path = resolve_data_file("data/params_default.ini");
    if (path.empty())
        throw std::runtime_error("no parameter file found; pass --params <file>");
    return load_params(path);
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    fs::create_directories(dir);
    return dir;
}

std::vector<double> parse_fraction_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::runtime_error("empty fraction list");
    return out;
}

// Overrides the relative-gap argument baked into the bundled adapter's
// default command template.
void apply_mip_gap(std::string& command, double mip_gap) {
    if (mip_gap <= 0.0) return;
    const std::string def = "--mip-rel-gap 0.01";
    if (auto pos = command.find(def); pos != std::string::npos) {
        std::ostringstream g;
        g << "--mip-rel-gap " << mip_gap;
        command.replace(pos, def.size(), g.str());
    }
}

// Plan CSV: one row per grid point with interleaved dose/pill columns per
// drug. Doses are grams administered at the step; pills are zero for
// intravenous drugs.
void save_plan_csv(const model_params& params, const std::vector<std::vector<double>>& doses,
                   const std::vector<std::vector<int>>& pills, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "step,t_days";
    for (const auto& d : params.drugs) out << ",dose_" << d.name << ",pills_" << d.name;
    out << "\n";
    const int S = params.grid.n_steps();
    out.precision(12);
    for (int s = 0; s <= S; ++s) {
        out << s << "," << params.grid.t_days(s);
        for (size_t d = 0; d < params.drugs.size(); ++d)
            out << "," << doses[d][s] << "," << pills[d][s];
        out << "\n";
    }
}

// Loads a plan CSV and aligns params.grid.step_hours with the file's t_days
// column, so a plan written at one grid step round-trips without flags.
std::vector<std::vector<double>> load_plan_csv(model_params& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read plan file " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty plan file " + path);
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    int time_col = -1;
    for (size_t c = 0; c < cols.size(); ++c)
        if (cols[c] == "t_days") time_col = static_cast<int>(c);
    if (time_col < 0) throw std::runtime_error("plan file lacks column t_days");
    std::vector<int> dose_col(params.drugs.size(), -1);
    for (size_t d = 0; d < params.drugs.size(); ++d) {
        const std::string want = "dose_" + params.drugs[d].name;
        for (size_t c = 0; c < cols.size(); ++c)
            if (cols[c] == want) dose_col[d] = static_cast<int>(c);
        if (dose_col[d] < 0)
            throw std::runtime_error("plan file lacks column " + want);
    }
    std::vector<std::vector<double>> doses(params.drugs.size());
    std::vector<double> times;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (time_col >= static_cast<int>(cells.size()))
            throw std::runtime_error("short row in plan file");
        times.push_back(std::stod(cells[time_col]));
        for (size_t d = 0; d < params.drugs.size(); ++d) {
            if (dose_col[d] >= static_cast<int>(cells.size()))
                throw std::runtime_error("short row in plan file");
            doses[d].push_back(std::stod(cells[dose_col[d]]));
        }
    }
    if (times.size() < 2) throw std::runtime_error("plan file has fewer than two rows");
    params.grid.step_hours = (times[1] - times[0]) * 24.0;
    const int S = params.grid.n_steps();
    if (static_cast<int>(times.size()) != S + 1)
        throw std::runtime_error("plan file has " + std::to_string(times.size()) +
                                 " rows but a " + std::to_string(params.grid.step_hours) +
                                 "-hour grid over " + std::to_string(params.grid.horizon_days) +
                                 " days has " + std::to_string(S + 1) + " points");
    return doses;
}

trajectory make_trajectory(const std::vector<double>& values, double dt_days) {
    trajectory t;
    t.values = values;
    t.times.resize(values.size());
    for (size_t i = 0; i < values.size(); ++i) t.times[i] = static_cast<double>(i) * dt_days;
    return t;
}

struct sim_summary {
    double objective = 0.0;
    double total_cells = 0.0;
    double min_neutrophils = 0.0;
    double min_lymphocytes = 0.0;
};

// Simulates a dose schedule and writes the four trajectory CSVs.
sim_summary write_simulation_outputs(const model_params& params,
                                     const std::vector<std::vector<double>>& doses,
                                     const fs::path& out_dir) {
    const time_grid& grid = params.grid;
    const int S = grid.n_steps();
    const int M = grid.horizon_days;
    std::vector<trajectory> pk;
    std::vector<std::string> drug_names;
    for (size_t d = 0; d < params.drugs.size(); ++d) {
        pk.push_back(simulate_pk(params.drugs[d], doses[d], grid));
        drug_names.push_back(params.drugs[d].name);
    }
    std::vector<trajectory> pd = simulate_pd(params.tumor, params.drugs, pk, grid);
    std::vector<std::vector<double>> day_conc(params.drugs.size());
    for (size_t d = 0; d < params.drugs.size(); ++d)
        for (int m = 0; m <= M; ++m) day_conc[d].push_back(pk[d].values[grid.day_start_step(m)]);
    trajectory wbc = simulate_wbc(params.wbc, params.drugs, day_conc, M);

    if (!pk.empty())
        save_trajectories_csv(pk, drug_names, (out_dir / "concentrations.csv").string());
    std::vector<std::string> type_names;
    for (const auto& ct : params.tumor.cell_types) type_names.push_back(ct.name);
    save_trajectories_csv(pd, type_names, (out_dir / "log_burden.csv").string());

    std::vector<trajectory> counts = pd;
    trajectory total = make_trajectory(std::vector<double>(S + 1, 0.0), grid.step_days());
    for (size_t q = 0; q < counts.size(); ++q)
        for (int s = 0; s <= S; ++s) {
            counts[q].values[s] = std::exp(pd[q].values[s]);
            total.values[s] += counts[q].values[s];
        }
    counts.push_back(total);
    std::vector<std::string> count_names = type_names;
    count_names.push_back("total");
    save_trajectories_csv(counts, count_names, (out_dir / "cell_counts.csv").string());

    trajectory neu = wbc, lym = wbc;
    for (int m = 0; m <= M; ++m) {
        neu.values[m] = params.wbc.theta_neu * wbc.values[m];
        lym.values[m] = params.wbc.theta_lym * wbc.values[m];
    }
    save_trajectories_csv({wbc, neu, lym}, {"white_cells", "neutrophils", "lymphocytes"},
                          (out_dir / "white_cells.csv").string());

    sim_summary sum;
    for (const auto& t : pd) sum.objective += t.values[S];
    sum.total_cells = counts.back().values[S];
    sum.min_neutrophils = *std::min_element(neu.values.begin(), neu.values.end());
    sum.min_lymphocytes = *std::min_element(lym.values.begin(), lym.values.end());
    return sum;
}

struct build_config {
    double h_minutes = 240.0;
    std::string mode = "discrete";
    int levels = 20;
    bool stochastic = false;
    std::string scenarios_path;
    double epsilon = 0.05;
    double n_surg = 0.4e9;
    std::string objective = "shrinkage";
};

void add_build_flags(CLI::App* cmd, build_config& cfg) {
    cmd->add_option("--h-minutes", cfg.h_minutes, "grid step in minutes")->check(CLI::PositiveNumber);
    cmd->add_option("--mode", cfg.mode, "bilinear handling: discrete or mccormick")
        ->check(CLI::IsMember({"discrete", "mccormick"}));
    cmd->add_option("--levels", cfg.levels, "white-cell discretization levels");
    cmd->add_flag("--stochastic", cfg.stochastic, "build the chance-constrained model");
    cmd->add_option("--scenarios", cfg.scenarios_path, "scenario CSV for --stochastic");
    cmd->add_option("--epsilon", cfg.epsilon, "permitted miss probability (stochastic)");
    cmd->add_option("--n-surg", cfg.n_surg, "surgical cell-count threshold (stochastic)");
    cmd->add_option("--objective", cfg.objective, "stochastic objective: shrinkage or probability")
        ->check(CLI::IsMember({"shrinkage", "probability"}));
}

transcribed_model build_from_config(model_params params, const build_config& cfg) {
    params.grid.step_hours = cfg.h_minutes / 60.0;
    build_options opts;
    opts.bilinear = cfg.mode == "mccormick" ? bilinear_mode::mccormick : bilinear_mode::discrete;
    opts.wbc_levels = cfg.levels;
    opts.epsilon = cfg.epsilon;
    opts.n_surg = cfg.n_surg;
    opts.objective =
        cfg.objective == "probability" ? objective_mode::probability : objective_mode::shrinkage;
    if (!cfg.stochastic) return build_deterministic(params, opts);
    std::string spath = cfg.scenarios_path;
    if (spath.empty()) spath = resolve_data_file("data/scenarios_default.csv");
    if (spath.empty())
        throw std::runtime_error("no scenario file found; pass --scenarios <file>");
    opts.scenarios = load_scenarios(spath);
    return build_chance_constrained(params, opts);
}

void write_feasibility_report(const transcribed_model& model, const solve_result& res,
                              const treatment_plan& plan, const std::string& path) {
    std::ofstream out(path);
    out.precision(10);
    const char* status = res.status == solve_status::optimal      ? "optimal"
                         : res.status == solve_status::infeasible ? "infeasible"
                         : res.status == solve_status::unbounded  ? "unbounded"
                                                                  : "limit";
    out << "status: " << status << "\n";
    out << "objective: " << res.objective << "\n";
    out << "relative_gap: " << res.gap << "\n";
    out << "runtime_seconds: " << res.runtime_seconds << "\n";
    out << "checker_findings: " << res.violations.size() << "\n";
    for (const auto& v : res.violations) out << "  " << v << "\n";
    out << "max_concentration_error: " << plan.max_concentration_error << "\n";
    out << "max_log_burden_error: " << plan.max_log_burden_error << "\n";
    out << "white_cell_linearization_gap: " << plan.max_white_cell_error << "\n";

    const model_params& p = model.params;
    double min_neu = 1e300, min_lym = 1e300;
    for (double n : plan.neutrophils) min_neu = std::min(min_neu, n);
    for (double n : plan.lymphocytes) min_lym = std::min(min_lym, n);
    out << "min_neutrophils: " << min_neu << " (floor " << p.wbc.beta_neu << ")\n";
    out << "min_lymphocytes: " << min_lym << " (floor " << p.wbc.beta_lym << ")\n";

    if (model.n_scenarios > 0) {
        out << "covered_probability: " << plan.covered_probability << "\n";
        // independent check: re-simulate each selected scenario from the
        // dosing schedule and compare the final total count to the threshold
        std::vector<trajectory> pk;
        for (size_t d = 0; d < p.drugs.size(); ++d)
            pk.push_back(simulate_pk(p.drugs[d], plan.doses[d], p.grid));
        const scenario_set& set = *model.options.scenarios;
        for (int k = 0; k < model.n_scenarios; ++k) {
            if (!plan.scenario_selected[k]) continue;
            tumor_params tumor = p.tumor;
            for (size_t q = 0; q < tumor.n0_by_type.size(); ++q)
                tumor.n0_by_type[q] = std::exp(set.scenarios[k].log_pops[q]);
            auto pd = simulate_pd(tumor, p.drugs, pk, p.grid);
            double total = 0.0;
            for (const auto& t : pd) total += std::exp(t.values.back());
            out << "scenario_" << k + 1 << "_final_cells: " << total
                << (total <= model.options.n_surg ? " <= " : " > ") << model.options.n_surg
                << "\n";
        }
    }
}

int run_simulate(const std::string& params_path, const std::string& out, const std::string& plan_path,
                 bool no_drugs) {
    model_params params = load_params_or_die(params_path);
    fs::path out_dir = ensure_out_dir(out);
    const int S = params.grid.n_steps();
    std::vector<std::vector<double>> doses(params.drugs.size(), std::vector<double>(S + 1, 0.0));
    if (!plan_path.empty()) {
        if (no_drugs) throw std::runtime_error("--plan and --no-drugs are mutually exclusive");
        doses = load_plan_csv(params, plan_path);
    }
    sim_summary sum = write_simulation_outputs(params, doses, out_dir);
    std::cout.precision(10);
    std::cout << "final log burden objective: " << sum.objective << "\n"
              << "final total cells: " << sum.total_cells << "\n"
              << "final diameter (mm): " << cells_to_diameter(sum.total_cells) << "\n"
              << "min neutrophils: " << sum.min_neutrophils << " (floor " << params.wbc.beta_neu
              << ")\n"
              << "min lymphocytes: " << sum.min_lymphocytes << " (floor " << params.wbc.beta_lym
              << ")\n"
              << "wrote " << (out_dir / "concentrations.csv").string()
              << ", log_burden.csv, cell_counts.csv, white_cells.csv\n";
    return 0;
}

int run_scenarios(const std::string& params_path, const std::string& out, std::uint64_t seed,
                  int generations, int replications, int clusters, const std::string& space,
                  int restarts) {
    model_params params = load_params_or_die(params_path);
    fs::path out_dir = ensure_out_dir(out);
    if (params.tumor.cell_types.size() < 2)
        throw std::runtime_error("scenario generation needs at least one resistant cell type");
    branching_params bp;
    bp.alpha_mut.assign(params.tumor.cell_types.size() - 1,
                        (1.0 - bp.alpha_self) / static_cast<double>(params.tumor.cell_types.size() - 1));
    auto pops = simulate_branching(bp, generations, replications, seed);

    std::vector<std::string> type_names;
    for (const auto& ct : params.tumor.cell_types) type_names.push_back(ct.name);
    scenario_set set = cluster_scenarios(
        pops, type_names, clusters, seed,
        space == "log" ? studentize_space::log : studentize_space::raw, restarts);
    save_scenarios(set, (out_dir / "scenarios.csv").string());

    double mean0 = 0.0;
    for (const auto& rep : pops) mean0 += static_cast<double>(rep[0]);
    mean0 /= static_cast<double>(pops.size());
    const double expect0 = expected_populations(bp, generations)[0];
    std::cout.precision(6);
    std::cout << "replications: " << replications << ", sensitive-count mean " << mean0
              << " (expectation " << expect0 << ")\n";
    for (size_t k = 0; k < set.scenarios.size(); ++k) {
        std::cout << "scenario " << k + 1 << ": prob " << set.scenarios[k].prob << ", log pops";
        for (double v : set.scenarios[k].log_pops) std::cout << " " << v;
        std::cout << "\n";
    }
    std::cout << "wrote " << (out_dir / "scenarios.csv").string() << "\n";
    return 0;
}

int run_calibrate(const std::string& params_path, const std::string& out, std::uint64_t seed,
                  std::vector<std::string> drug_names, int trials, double sigma_frac) {
    model_params params = load_params_or_die(params_path);
    fs::path out_dir = ensure_out_dir(out);
    if (drug_names.empty())
        for (const auto& [name, spec] : params.regimens) drug_names.push_back(name);

    model_params updated = params;
    std::cout.precision(6);
    for (const auto& name : drug_names) {
        auto it = params.regimens.find(name);
        if (it == params.regimens.end())
            throw std::runtime_error("no regimen for drug " + name + " in the parameter file");
        const drug_params& drug = params.drug_by_name(name);
        calibration_result res =
            calibrate_kill_effect(it->second, drug, params.tumor, trials, sigma_frac, seed);
        for (auto& d : updated.drugs) {
            if (d.name != name) continue;
            d.eta0 = res.eta;
            d.eta_wbc = res.eta;
            for (size_t q = 0; q < d.eta_by_type.size(); ++q)
                d.eta_by_type[q] =
                    params.tumor.cell_types[q].resistant_to == d.id ? 0.25 * res.eta : res.eta;
        }
        std::cout << name << ": eta " << res.eta << " m^3/(g day), simulated response rate "
                  << res.achieved_prr << " (target " << it->second.prr << "), margin " << res.delta
                  << ", " << res.bisection_steps << " bisection steps\n";
    }
    const std::string out_file = (out_dir / "params_calibrated.ini").string();
    save_params(updated, out_file);
    std::cout << "wrote " << out_file << "\n";
    return 0;
}

int run_build(const std::string& params_path, const std::string& out, const build_config& cfg) {
    model_params params = load_params_or_die(params_path);
    fs::path out_dir = ensure_out_dir(out);
    transcribed_model model = build_from_config(params, cfg);
    const std::string mps = (out_dir / "model.mps").string();
    write_mps(model.milp, mps);
    std::cout << "variables " << model.milp.n_vars() << ", rows " << model.milp.n_rows()
              << ", integer " << model.milp.n_integer() << ", binary " << model.milp.n_binary()
              << "\n"
              << "wrote " << mps << "\n";
    return 0;
}

int run_solve(const std::string& params_path, const std::string& out, const build_config& cfg,
              bool use_builtin, std::string solver_cmd, double time_limit, double mip_gap) {
    model_params params = load_params_or_die(params_path);
    fs::path out_dir = ensure_out_dir(out);
    transcribed_model model = build_from_config(params, cfg);
    write_mps(model.milp, (out_dir / "model.mps").string());

    solve_result res;
    if (use_builtin) {
        res = solve_builtin(model.milp);
    } else {
        if (solver_cmd.empty()) solver_cmd = default_solver_command(exe_dir());
        if (solver_cmd.empty())
            throw std::runtime_error(
                "no external solver available: set CHEMOPLAN_SOLVER_CMD, pass --solver, or use "
                "--builtin");
        apply_mip_gap(solver_cmd, mip_gap);
        res = solve_external(model.milp, solver_cmd, time_limit);
    }
    write_solution(res, (out_dir / "solution.sol").string());

    std::cout.precision(10);
    const char* status = res.status == solve_status::optimal      ? "optimal"
                         : res.status == solve_status::infeasible ? "infeasible"
                         : res.status == solve_status::unbounded  ? "unbounded"
                                                                  : "limit";
    std::cout << "status: " << status << ", objective " << res.objective << ", gap " << res.gap
              << ", runtime " << res.runtime_seconds << "s\n";
    if (res.status == solve_status::infeasible) return 2;
    if (!res.has_assignment()) {
        std::cerr << "no incumbent assignment returned\n";
        return 1;
    }

    treatment_plan plan = extract_plan(model, res.assignment);
    save_plan_csv(model.params, plan.doses, plan.pills, (out_dir / "plan.csv").string());
    write_feasibility_report(model, res, plan, (out_dir / "feasibility_report.txt").string());

    // trajectory CSVs carry the model's own state values
    const time_grid& grid = model.params.grid;
    std::vector<trajectory> conc;
    std::vector<std::string> drug_names;
    for (size_t d = 0; d < model.params.drugs.size(); ++d) {
        conc.push_back(make_trajectory(plan.concentrations[d], grid.step_days()));
        drug_names.push_back(model.params.drugs[d].name);
    }
    save_trajectories_csv(conc, drug_names, (out_dir / "concentrations.csv").string());
    std::vector<trajectory> pd;
    std::vector<std::string> type_names;
    for (size_t q = 0; q < plan.log_burden.size(); ++q) {
        pd.push_back(make_trajectory(plan.log_burden[q], grid.step_days()));
        type_names.push_back(model.params.tumor.cell_types[q].name);
    }
    save_trajectories_csv(pd, type_names, (out_dir / "log_burden.csv").string());
    trajectory wbc = make_trajectory(plan.white_cells, 1.0);
    trajectory neu = make_trajectory(plan.neutrophils, grid.step_days());
    trajectory lym = make_trajectory(plan.lymphocytes, grid.step_days());
    save_trajectories_csv({wbc}, {"white_cells"}, (out_dir / "white_cells.csv").string());
    save_trajectories_csv({neu, lym}, {"neutrophils", "lymphocytes"},
                          (out_dir / "step_counts.csv").string());

    std::cout << "consistency: concentration error " << plan.max_concentration_error
              << ", log burden error " << plan.max_log_burden_error
              << ", white-cell linearization gap " << plan.max_white_cell_error << "\n";
    if (model.n_scenarios > 0)
        std::cout << "covered probability: " << plan.covered_probability << "\n";
    std::cout << "wrote plan.csv, solution.sol, feasibility_report.txt and trajectory CSVs in "
              << out_dir.string() << "\n";
    return 0;
}

int run_sweep(const std::string& params_path, const std::string& out, const build_config& cfg,
              const std::string& target_name, const std::string& drug, const std::string& fractions,
              bool use_builtin, std::string solver_cmd, double time_limit, double mip_gap) {
    model_params params = load_params_or_die(params_path);
    fs::path out_dir = ensure_out_dir(out);
    params.grid.step_hours = cfg.h_minutes / 60.0;
    build_options opts;
    opts.bilinear = cfg.mode == "mccormick" ? bilinear_mode::mccormick : bilinear_mode::discrete;
    opts.wbc_levels = cfg.levels;

    solve_backend backend;
    backend.time_limit_seconds = time_limit;
    if (!use_builtin) {
        backend.command = solver_cmd.empty() ? default_solver_command(exe_dir()) : solver_cmd;
        if (backend.command.empty())
            throw std::runtime_error(
                "no external solver available: set CHEMOPLAN_SOLVER_CMD, pass --solver, or use "
                "--builtin");
        apply_mip_gap(backend.command, mip_gap);
    }

    sweep_result res = sensitivity_sweep(params, sweep_target_from_string(target_name), drug,
                                         parse_fraction_list(fractions), opts, backend);
    const std::string csv = (out_dir / ("sweep_" + target_name + ".csv")).string();
    save_sweep_csv(res, csv);
    std::cout.precision(10);
    bool any_error = false;
    for (const auto& pt : res.points) {
        std::cout << "fraction " << pt.fraction << ": " << pt.status;
        if (pt.solved) std::cout << ", objective " << pt.objective;
        if (!pt.message.empty()) std::cout << " (" << pt.message << ")";
        std::cout << "\n";
        if (pt.status == "error") any_error = true;
    }
    std::cout << "wrote " << csv << "\n";
    return any_error ? 1 : 0;
}

int run_regularize(const std::string& params_path, const std::string& out,
                   const std::string& plan_path) {
    model_params params = load_params_or_die(params_path);
    fs::path out_dir = ensure_out_dir(out);
    treatment_plan plan;
    plan.doses = load_plan_csv(params, plan_path);
    regularization_result res = regularize_plan(plan, params);

    const std::string plan_csv = (out_dir / "regulated_plan.csv").string();
    save_plan_csv(params, res.regulated.doses, res.regulated.pills, plan_csv);
    std::ofstream report((out_dir / "regularize_report.txt").string());
    report.precision(10);
    report << "accepted: " << (res.accepted ? "yes" : "no") << "\n"
           << "input objective: " << res.optimal_objective << "\n"
           << "regulated objective: " << res.regulated_objective << "\n"
           << "input diameter (mm): " << res.optimal_diameter_mm << "\n"
           << "regulated diameter (mm): " << res.regulated_diameter_mm << "\n"
           << "diameter delta (mm): " << res.diameter_delta_mm() << "\n"
           << "findings: " << res.violations.size() << "\n";
    for (const auto& v : res.violations) report << "  " << v << "\n";

    std::cout.precision(10);
    std::cout << (res.accepted ? "accepted" : "rejected") << ": objective "
              << res.optimal_objective << " -> " << res.regulated_objective << ", diameter "
              << res.optimal_diameter_mm << "mm -> " << res.regulated_diameter_mm << "mm (delta "
              << res.diameter_delta_mm() << "mm)\n"
              << "wrote " << plan_csv << " and regularize_report.txt\n";
    return res.accepted ? 0 : 2;
}

int run_validate(const std::string& params_path, std::uint64_t seed) {
    model_params params = load_params_or_die(params_path);
    auto reports = run_property_suites(params, seed);
    bool all = true;
    for (const auto& r : reports) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
        all = all && r.passed;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chemotherapy treatment-planning toolkit"};
    app.require_subcommand(1);

    std::string params_path, out_dir;
    std::uint64_t seed = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--params", params_path, "parameter file (default: bundled)");
        cmd->add_option("--out", out_dir, "output directory (default: current)");
        cmd->add_option("--seed", seed, "random seed");
    };

    auto* sim = app.add_subcommand("simulate", "simulate a dosing schedule (or drug-free growth)");
    std::string plan_path;
    bool no_drugs = false;
    add_common(sim);
    sim->add_option("--plan", plan_path, "plan CSV to simulate");
    sim->add_flag("--no-drugs", no_drugs, "simulate untreated growth");

    auto* scen = app.add_subcommand("scenarios", "generate tumor-composition scenarios");
    int generations = 30, replications = 10000, clusters = 10, restarts = 50;
    std::string space = "raw";
    add_common(scen);
    scen->add_option("--generations", generations, "branching generations");
    scen->add_option("--replications", replications, "Monte Carlo replications");
    scen->add_option("--clusters", clusters, "number of scenarios (k)");
    scen->add_option("--space", space, "studentization space: raw or log")
        ->check(CLI::IsMember({"raw", "log"}));
    scen->add_option("--restarts", restarts, "k-means restarts");

    auto* cal = app.add_subcommand("calibrate", "calibrate kill effects from response rates");
    std::vector<std::string> cal_drugs;
    int trials = 1000;
    double sigma_frac = 0.10;
    add_common(cal);
    cal->add_option("--drug", cal_drugs, "drug to calibrate (repeatable; default: all regimens)");
    cal->add_option("--trials", trials, "simulated patients");
    cal->add_option("--sigma-frac", sigma_frac, "patient variability as a fraction of eta");

    build_config bcfg;
    auto* bld = app.add_subcommand("build", "transcribe the planning model to an MPS file");
    add_common(bld);
    add_build_flags(bld, bcfg);

    auto* slv = app.add_subcommand("solve", "build and solve the planning model");
    bool use_builtin = false;
    std::string solver_cmd;
    double time_limit = 1800.0, mip_gap = 0.0;
    add_common(slv);
    add_build_flags(slv, bcfg);
    slv->add_flag("--builtin", use_builtin, "use the built-in solver (micro instances only)");
    slv->add_option("--solver", solver_cmd,
                    "external solver command template ({mps} {sol} {time_limit}); default: "
                    "CHEMOPLAN_SOLVER_CMD or the bundled scipy adapter");
    slv->add_option("--time-limit", time_limit, "solver time limit in seconds");
    slv->add_option("--mip-gap", mip_gap, "relative MIP gap for the bundled adapter");

    auto* swp = app.add_subcommand("sweep", "sensitivity sweep over a scaled parameter");
    std::string target = "kill-effect", sweep_drug, fractions = "0.8,0.9,1.0,1.1,1.2";
    add_common(swp);
    add_build_flags(swp, bcfg);
    swp->add_option("--target", target,
                    "clearance | kill-effect | wbc-kill-effect | resistance-decay | "
                    "neutropenia-threshold | max-dose");
    swp->add_option("--drug", sweep_drug, "drug whose parameter is scaled (drug targets only)");
    swp->add_option("--fractions", fractions, "comma-separated scale fractions");
    swp->add_flag("--builtin", use_builtin, "use the built-in solver");
    swp->add_option("--solver", solver_cmd, "external solver command template");
    swp->add_option("--time-limit", time_limit, "per-point time limit in seconds");
    swp->add_option("--mip-gap", mip_gap, "relative MIP gap for the bundled adapter");

    auto* reg = app.add_subcommand("regularize", "round a plan to a clinic-friendly pattern");
    std::string reg_plan;
    add_common(reg);
    reg->add_option("--plan", reg_plan, "plan CSV to regularize")->required();

    auto* val = app.add_subcommand("validate", "run the seeded property suites");
    add_common(val);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return run_simulate(params_path, out_dir, plan_path, no_drugs);
        if (*scen)
            return run_scenarios(params_path, out_dir, seed, generations, replications, clusters,
                                 space, restarts);
        if (*cal) return run_calibrate(params_path, out_dir, seed, cal_drugs, trials, sigma_frac);
        if (*bld) return run_build(params_path, out_dir, bcfg);
        if (*slv)
            return run_solve(params_path, out_dir, bcfg, use_builtin, solver_cmd, time_limit,
                             mip_gap);
        if (*swp)
            return run_sweep(params_path, out_dir, bcfg, target, sweep_drug, fractions, use_builtin,
                             solver_cmd, time_limit, mip_gap);
        if (*reg) return run_regularize(params_path, out_dir, reg_plan);
        if (*val) return run_validate(params_path, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
