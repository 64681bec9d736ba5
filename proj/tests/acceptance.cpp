// Acceptance harness: runs the eleven shipping criteria end to end and
// prints one PASS/FAIL/SKIP line per criterion. Exits with the number of
// failed criteria. External-solver criteria are skipped (not failed) when
// no solver command is available; the oracle-equivalence criterion is
// mandatory in that configuration and always runs here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "chemoplan/analysis.hpp"
#include "chemoplan/calibration.hpp"
#include "chemoplan/domain.hpp"
#include "chemoplan/dynamics.hpp"
#include "chemoplan/scenarios.hpp"
#include "chemoplan/solver.hpp"
#include "chemoplan/transcription.hpp"
#include "chemoplan/validation.hpp"

using namespace chemoplan;

namespace {

enum class outcome { pass, fail, skip };

struct criterion_result {
    int id = 0;
    std::string label;
    outcome state = outcome::fail;
    std::string detail;
};

int failures = 0;

void report(const criterion_result& r) {
    const char* tag = r.state == outcome::pass ? "PASS" : r.state == outcome::fail ? "FAIL" : "SKIP";
    std::printf("[%s] criterion %2d (%s): %s\n", tag, r.id, r.label.c_str(), r.detail.c_str());
    std::fflush(stdout);
    if (r.state == outcome::fail) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

model_params params_at(double step_hours) {
    model_params p = load_params("data/params_default.ini");
    p.grid.step_hours = step_hours;
    return p;
}

}  // namespace

int main() {
    const std::string solver_cmd = default_solver_command(".");
    const bool have_solver = !solver_cmd.empty();
    if (!have_solver)
        std::printf("note: no external solver found; solver-bound criteria are skipped and the\n"
                    "      oracle-equivalence criterion stands in for them\n");

    // 1. initial tumor state from the scenario-weighted means
    {
        criterion_result r{1, "initial log burden", outcome::fail, ""};
        try {
            transcribed_model tm = build_deterministic(params_at(4.0), {});
            double total = 0.0;
            for (double p0 : tm.initial_log_pops) total += p0;
            r.state = std::abs(total - 74.34) <= 0.3 ? outcome::pass : outcome::fail;
            r.detail = "sum of initial log populations " + fmt(total) + " vs 74.34 +/- 0.3";
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        report(r);
    }

    // 2. deterministic optimum at h = 240 min with the external solver,
    //    saved for criteria 3 and 9
    solve_result det_res;
    treatment_plan det_plan;
    bool det_solved = false;
    {
        criterion_result r{2, "deterministic optimum", outcome::fail, ""};
        if (!have_solver) {
            r.state = outcome::skip;
            r.detail = "no external solver; oracle equivalence (criterion 8) is mandatory instead";
        } else {
            try {
                auto t0 = std::chrono::steady_clock::now();
                transcribed_model tm = build_deterministic(params_at(4.0), {});
                det_res = solve_external(tm.milp, solver_cmd, 1800.0);
                const double secs = seconds_since(t0);
                if (det_res.status == solve_status::optimal && det_res.violations.empty()) {
                    det_plan = extract_plan(tm, det_res.assignment);
                    det_solved = true;
                    const bool in_band = det_res.objective >= 67.0 && det_res.objective <= 69.5;
                    r.state = in_band ? outcome::pass : outcome::fail;
                    r.detail = "objective " + fmt(det_res.objective, 8) + " in [67.0, 69.5], " +
                               fmt(secs, 3) + "s, checker findings 0";
                } else {
                    r.detail = "status " + to_string(det_res.status) + ", " +
                               std::to_string(det_res.violations.size()) + " checker findings";
                }
            } catch (const std::exception& e) {
                r.detail = e.what();
            }
        }
        report(r);
    }

    // 3. relaxation ordering: envelope objective never exceeds the
    //    discretized one, on the full instance and on the fixture
    {
        criterion_result r{3, "relaxation ordering", outcome::fail, ""};
        try {
            build_options mopts;
            mopts.wbc_levels = 2;
            solve_result micro_tight =
                solve_builtin(build_deterministic(micro_instance(), mopts).milp);
            mopts.bilinear = bilinear_mode::mccormick;
            solve_result micro_relaxed =
                solve_builtin(build_deterministic(micro_instance(), mopts).milp);
            const bool micro_ok = micro_tight.status == solve_status::optimal &&
                                  micro_relaxed.status == solve_status::optimal &&
                                  micro_relaxed.objective <= micro_tight.objective + 1e-9;
            std::string detail = "fixture " + fmt(micro_relaxed.objective, 8) +
                                 " <= " + fmt(micro_tight.objective, 8);

            if (have_solver && det_solved) {
                build_options opts;
                opts.bilinear = bilinear_mode::mccormick;
                transcribed_model tm = build_deterministic(params_at(4.0), opts);
                // a tight gap so the relaxed bound is meaningful next to the
                // 1%-gap discretized solve
                std::string cmd = solver_cmd;
                const std::string def = "--mip-rel-gap 0.01";
                if (auto pos = cmd.find(def); pos != std::string::npos)
                    cmd.replace(pos, def.size(), "--mip-rel-gap 0.001");
                solve_result relaxed = solve_external(tm.milp, cmd, 1800.0);
                const bool relaxed_solved =
                    (relaxed.status == solve_status::optimal ||
                     (relaxed.status == solve_status::limit && relaxed.has_assignment())) &&
                    relaxed.violations.empty();
                const bool full_ok =
                    relaxed_solved && relaxed.objective <= det_res.objective + 1e-6;
                detail += "; full instance " + fmt(relaxed.objective, 8) +
                          " <= " + fmt(det_res.objective, 8) + " (gap " +
                          fmt(relaxed.gap, 3) + ")";
                r.state = micro_ok && full_ok ? outcome::pass : outcome::fail;
            } else {
                r.state = micro_ok ? outcome::pass : outcome::fail;
                detail += "; full instance skipped (no external solver)";
            }
            r.detail = detail;
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        report(r);
    }

    // 4. chance-constrained model: coverage and exact re-simulated
    //    surgical thresholds for every selected scenario
    {
        criterion_result r{4, "stochastic model", outcome::fail, ""};
        if (!have_solver) {
            r.state = outcome::skip;
            r.detail = "no external solver";
        } else {
            try {
                model_params p = params_at(4.0);
                build_options opts;
                opts.scenarios = load_scenarios("data/scenarios_default.csv");
                opts.epsilon = 0.05;
                opts.n_surg = 0.4e9;
                transcribed_model tm = build_chance_constrained(p, opts);
                solve_result res = solve_external(tm.milp, solver_cmd, 1800.0);
                if (res.status != solve_status::optimal || !res.violations.empty()) {
                    r.detail = "status " + to_string(res.status) + ", " +
                               std::to_string(res.violations.size()) + " checker findings";
                } else {
                    treatment_plan plan = extract_plan(tm, res.assignment);
                    std::vector<trajectory> pk;
                    for (size_t d = 0; d < p.drugs.size(); ++d)
                        pk.push_back(simulate_pk(p.drugs[d], plan.doses[d], p.grid));
                    bool thresholds_ok = true;
                    double worst = 0.0;
                    const scenario_set& set = *tm.options.scenarios;
                    for (int k = 0; k < tm.n_scenarios; ++k) {
                        if (!plan.scenario_selected[k]) continue;
                        tumor_params tumor = p.tumor;
                        for (size_t q = 0; q < tumor.n0_by_type.size(); ++q)
                            tumor.n0_by_type[q] = std::exp(set.scenarios[k].log_pops[q]);
                        auto pd = simulate_pd(tumor, p.drugs, pk, p.grid);
                        double total = 0.0;
                        for (const auto& t : pd) total += std::exp(t.values.back());
                        worst = std::max(worst, total);
                        thresholds_ok = thresholds_ok && total <= opts.n_surg;
                    }
                    const bool coverage_ok = plan.covered_probability >= 0.95;
                    const bool band_ok = res.objective >= 66.5 && res.objective <= 69.5;
                    r.state = coverage_ok && thresholds_ok && band_ok ? outcome::pass
                                                                      : outcome::fail;
                    r.detail = "objective " + fmt(res.objective, 8) + " in [66.5, 69.5], coverage " +
                               fmt(plan.covered_probability, 4) +
                               " >= 0.95, worst re-simulated count " + fmt(worst, 6) + " <= " +
                               fmt(opts.n_surg, 4);
                }
            } catch (const std::exception& e) {
                r.detail = e.what();
            }
        }
        report(r);
    }

    // 5. scenario generation: branching mean and the dominant cluster
    {
        criterion_result r{5, "scenario generation", outcome::fail, ""};
        try {
            auto t0 = std::chrono::steady_clock::now();
            branching_params bp;
            bp.alpha_mut = {0.005, 0.005, 0.005};
            auto pops = simulate_branching(bp, 30, 10000, 1);
            const double expect = expected_populations(bp, 30)[0];
            double mean = 0.0;
            for (const auto& row : pops) mean += static_cast<double>(row[0]);
            mean /= static_cast<double>(pops.size());
            double var = 0.0;
            for (const auto& row : pops) {
                const double d = static_cast<double>(row[0]) - mean;
                var += d * d;
            }
            var /= static_cast<double>(pops.size() - 1);
            const double se = std::sqrt(var / static_cast<double>(pops.size()));
            const bool mean_ok = std::abs(mean - expect) <= 3.0 * se;

            scenario_set set = cluster_scenarios(
                pops, {"sensitive", "capecitabine", "docetaxel", "etoposide"}, 10, 1);
            const double dom = set.scenarios[0].prob;
            const bool dom_ok = dom >= 0.72 && dom <= 0.82;
            const double want[4] = {20.53, 17.89, 17.89, 17.89};
            bool centroid_ok = true;
            for (int q = 0; q < 4; ++q)
                centroid_ok =
                    centroid_ok && std::abs(set.scenarios[0].log_pops[q] - want[q]) <= 0.15;
            const double secs = seconds_since(t0);
            r.state = mean_ok && dom_ok && centroid_ok && secs < 60.0 ? outcome::pass
                                                                      : outcome::fail;
            r.detail = "mean " + fmt(mean) + " within 3 SE of " + fmt(expect) +
                       ", dominant cluster " + fmt(dom, 4) + " in [0.72, 0.82], centroid within "
                       "0.15, " + fmt(secs, 3) + "s < 60s";
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        report(r);
    }

    // 6. Euler global error bound at two step sizes
    {
        criterion_result r{6, "Euler error bound", outcome::fail, ""};
        try {
            property_report rep = check_euler_error_bound(load_params("data/params_default.ini"));
            r.state = rep.passed ? outcome::pass : outcome::fail;
            r.detail = rep.detail;
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        report(r);
    }

    // 7. schedule dominance on 200 random pairs
    {
        criterion_result r{7, "dominance property", outcome::fail, ""};
        try {
            property_report rep = check_dominance(load_params("data/params_default.ini"), 1, 200);
            r.state = rep.passed ? outcome::pass : outcome::fail;
            r.detail = rep.detail;
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        report(r);
    }

    // 8. built-in solver equals enumeration (mandatory replacement when the
    //    external criteria are skipped)
    {
        criterion_result r{8, "oracle equivalence", outcome::fail, ""};
        try {
            property_report rep = check_oracle_equivalence(1, 50);
            r.state = rep.passed ? outcome::pass : outcome::fail;
            r.detail = rep.detail;
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        report(r);
    }

    // 9. the neutropenia floor binds in the solved deterministic instance
    {
        criterion_result r{9, "neutropenia tightness", outcome::fail, ""};
        if (!det_solved) {
            r.state = have_solver ? outcome::fail : outcome::skip;
            r.detail = "needs the criterion-2 solve";
        } else {
            double min_neu = 1e300;
            for (double v : det_plan.neutrophils) min_neu = std::min(min_neu, v);
            const double beta = load_params("data/params_default.ini").wbc.beta_neu;
            const double ratio = min_neu / beta;
            r.state = ratio >= 1.0 - 1e-9 && ratio <= 1.02 ? outcome::pass : outcome::fail;
            r.detail = "min neutrophil count " + fmt(min_neu, 8) + " is " + fmt(ratio, 6) +
                       " of the floor (allowed [1.0, 1.02])";
        }
        report(r);
    }

    // 10. calibrated kill effects inside the clinical bands
    {
        criterion_result r{10, "calibration sanity", outcome::fail, ""};
        try {
            auto t0 = std::chrono::steady_clock::now();
            model_params p = load_params("data/params_default.ini");
            calibration_result doc = calibrate_kill_effect(p.regimens.at("docetaxel"),
                                                           p.drug_by_name("docetaxel"), p.tumor,
                                                           1000, 0.10, 1);
            calibration_result etop = calibrate_kill_effect(p.regimens.at("etoposide"),
                                                            p.drug_by_name("etoposide"), p.tumor,
                                                            1000, 0.10, 1);
            const double secs = seconds_since(t0);
            const bool doc_ok = doc.eta >= 6.0e-3 && doc.eta <= 1.0e-2;
            const bool etop_ok = etop.eta >= 3.5e-3 && etop.eta <= 7.0e-3;
            r.state = doc_ok && etop_ok && secs < 300.0 ? outcome::pass : outcome::fail;
            r.detail = "docetaxel " + fmt(doc.eta, 6) + " in [6.0e-3, 1.0e-2], etoposide " +
                       fmt(etop.eta, 6) + " in [3.5e-3, 7.0e-3], " + fmt(secs, 3) + "s < 300s";
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        report(r);
    }

    // 11. neutropenia-threshold sweep: 80% and 90% floors give the same
    //     optimum (the dose caps bind first)
    {
        criterion_result r{11, "sensitivity reproduction", outcome::fail, ""};
        if (!have_solver) {
            r.state = outcome::skip;
            r.detail = "no external solver";
        } else {
            try {
                model_params p = params_at(4.0);
                build_options opts;
                opts.bilinear = bilinear_mode::mccormick;
                solve_backend backend;
                backend.command = solver_cmd;
                const std::string def = "--mip-rel-gap 0.01";
                if (auto pos = backend.command.find(def); pos != std::string::npos)
                    backend.command.replace(pos, def.size(), "--mip-rel-gap 1e-4");
                backend.time_limit_seconds = 900.0;
                sweep_result sweep = sensitivity_sweep(p, sweep_target::neutropenia_threshold, "",
                                                       {0.8, 0.9}, opts, backend);
                const auto& a = sweep.points[0];
                const auto& b = sweep.points[1];
                if (!a.solved || !b.solved || !a.message.empty() || !b.message.empty()) {
                    r.detail = "sweep statuses " + a.status + " / " + b.status + "; " +
                               a.message + " " + b.message;
                } else if (a.gap > 5e-4 || b.gap > 5e-4) {
                    // the 100% threshold optimum sits ~0.11 above the 80/90%
                    // ones, so gaps past 5e-4 cannot certify equality
                    r.detail = "gaps " + fmt(a.gap, 3) + " / " + fmt(b.gap, 3) +
                               " too large to certify identical objectives";
                } else {
                    // equality up to the proven relative-gap tolerances
                    const double scale =
                        std::max(std::abs(a.objective), std::abs(b.objective));
                    const double tol = (a.gap + b.gap + 1e-6) * scale;
                    const double diff = std::abs(a.objective - b.objective);
                    r.state = diff <= tol ? outcome::pass : outcome::fail;
                    r.detail = "objectives " + fmt(a.objective, 10) + " (80%) vs " +
                               fmt(b.objective, 10) + " (90%), |diff| " + fmt(diff, 3) +
                               " <= gap tolerance " + fmt(tol, 3);
                }
            } catch (const std::exception& e) {
                r.detail = e.what();
            }
        }
        report(r);
    }

    if (failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures;
}
