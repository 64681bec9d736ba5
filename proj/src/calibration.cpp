#include "chemoplan/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace chemoplan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform_step(const trajectory& t) {
    if (t.size() < 2) throw sim_error("trajectory needs at least two grid points");
    const double h = t.times[1] - t.times[0];
    for (int s = 1; s + 1 < t.size(); ++s)
        if (std::fabs((t.times[s + 1] - t.times[s]) - h) > 1e-9)
            throw sim_error("trajectory grid is not uniform");
    if (h <= 0.0) throw sim_error("trajectory grid must advance in time");
    return h;
}

// Drift-only endpoint A and drift-propagated exposure W such that the final
// log burden equals A - eta_k * W for kill parameter eta_k.
void affine_coefficients(const trajectory& effective, const drift_params& drift, double* a_out,
                         double* w_out) {
    const double h = uniform_step(effective);
    const int steps = effective.size() - 1;
    double a = drift.p0;
    double w = 0.0;
    for (int s = 0; s < steps; ++s) {
        a = a + h * drift.lambda * (drift.ln_n_inf - a);
        w = (1.0 - h * drift.lambda) * w + h * effective.values[s];
    }
    *a_out = a;
    *w_out = w;
}

}  // namespace

std::vector<double> regimen_doses(const regimen_spec& spec, const time_grid& grid) {
    if (grid.horizon_days < spec.total_days()) {
        std::ostringstream os;
        os << "grid spans " << grid.horizon_days << " days but the trial needs "
           << spec.total_days();
        throw param_error(os.str());
    }
    // reuse the grid's meal snapping to place the administration hours
    time_grid admin_grid = grid;
    admin_grid.meal_offsets = spec.admin_hours;
    const std::vector<int> offsets = admin_grid.meal_steps_in_day();
    const int spd = grid.steps_per_day();

    std::vector<double> doses(grid.n_steps() + 1, 0.0);
    for (int cycle = 0; cycle < spec.cycles; ++cycle) {
        for (int on = 0; on < spec.days_on; ++on) {
            const int day = cycle * spec.cycle_days() + on;
            for (int off : offsets)
                doses[day * spd + off] += spec.dose_per_admin * grid.body_surface;
        }
    }
    return doses;
}

trajectory regimen_to_effective_concentration(const regimen_spec& spec, const drug_params& drug,
                                              const time_grid& grid) {
    trajectory pk = simulate_pk(drug, regimen_doses(spec, grid), grid);
    trajectory out;
    out.times = pk.times;
    out.values = effective_concentration(drug, pk.values);
    return out;
}

double solve_eta_for_delta(const trajectory& effective, const drift_params& drift,
                           const std::vector<double>& perturbations, double target_mean) {
    double a = 0.0, w = 0.0;
    affine_coefficients(effective, drift, &a, &w);
    if (w <= 0.0) throw sim_error("kill parameter is unidentifiable: no effective exposure");
    double eps_mean = 0.0;
    for (double e : perturbations) eps_mean += e;
    if (!perturbations.empty()) eps_mean /= static_cast<double>(perturbations.size());
    return (a - target_mean) / w - eps_mean;
}

calibration_result calibrate_kill_effect(const regimen_spec& spec, const drug_params& drug,
                                         const tumor_params& tumor, int trials,
                                         double sigma_frac, std::uint64_t seed) {
    if (trials < 1) throw param_error("calibration: need at least one trial");
    if (sigma_frac < 0.0) throw param_error("calibration: sigma_frac must be nonnegative");
    if (tumor.n0_by_type.empty()) throw param_error("calibration: tumor has no cell types");

    time_grid grid;
    grid.horizon_days = spec.total_days();
    grid.step_hours = 1.0;
    grid.meal_offsets = spec.admin_hours;

    const trajectory effective = regimen_to_effective_concentration(spec, drug, grid);
    drift_params drift;
    drift.p0 = std::log(tumor.n0_by_type[0]);
    drift.lambda = tumor.lambda;
    drift.ln_n_inf = std::log(tumor.n_inf_by_type[0]);

    double a = 0.0, w = 0.0;
    affine_coefficients(effective, drift, &a, &w);
    if (w <= 0.0) throw sim_error("kill parameter is unidentifiable: no effective exposure");

    // response threshold: diameter halved means the cell count falls by 8x
    const double p_resp = drift.p0 - std::log(8.0);
    if (a <= p_resp)
        throw sim_error("trial horizon too short: the untreated tumor already responds");

    calibration_result res;
    if (sigma_frac == 0.0) {
        res.eta = solve_eta_for_delta(effective, drift, {}, p_resp);
        res.achieved_prr = 0.5;  // mean sits exactly at the threshold
        return res;
    }

    std::mt19937_64 rng(splitmix64(seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(trials);
    for (double& zk : z) zk = normal(rng);

    double eta_cur = (a - p_resp) / w;
    std::vector<double> eps(trials);
    // simulated response rate when the mean final log burden sits at
    // p_resp + delta; the per-patient perturbations follow the current eta
    auto evaluate = [&](double delta, double* eta_out) {
        for (int k = 0; k < trials; ++k) eps[k] = sigma_frac * eta_cur * z[k];
        const double eta = solve_eta_for_delta(effective, drift, eps, p_resp + delta);
        int responders = 0;
        for (int k = 0; k < trials; ++k)
            if (a - (eta + eps[k]) * w <= p_resp) ++responders;
        *eta_out = eta;
        eta_cur = std::max(eta, 1e-30);
        return static_cast<double>(responders) / trials;
    };

    double lo = 0.0, hi = a - p_resp;
    double eta_lo = 0.0, eta_hi = 0.0;
    double prr_lo = evaluate(lo, &eta_lo);
    double prr_hi = evaluate(hi, &eta_hi);
    // rates fall as the margin grows; extend the bracket downward if even a
    // zero margin responds too rarely
    for (int grow = 0; prr_lo < spec.prr && grow < 60; ++grow) {
        lo = (lo == 0.0) ? -(a - p_resp) : 2.0 * lo;
        prr_lo = evaluate(lo, &eta_lo);
    }
    if (prr_lo < spec.prr || prr_hi > spec.prr) {
        std::ostringstream os;
        os << "calibration bracket failure for " << spec.drug << ": achievable response rates ["
           << prr_hi << ", " << prr_lo << "] do not contain " << spec.prr;
        throw sim_error(os.str());
    }

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        double eta_mid = 0.0;
        const double prr = evaluate(mid, &eta_mid);
        res.bisection_steps = it + 1;
        if (std::fabs(prr - spec.prr) <= 0.01) {
            res.eta = eta_mid;
            res.achieved_prr = prr;
            res.delta = mid;
            return res;
        }
        if (prr > spec.prr)
            lo = mid;
        else
            hi = mid;
    }
    std::ostringstream os;
    os << "calibration did not converge for " << spec.drug << " within 200 bisection steps";
    throw sim_error(os.str());
}

double gompertz_shape(double n0, double n_inf, double doubling_time_days) {
    if (n0 <= 0.0 || n_inf <= 2.0 * n0)
        throw param_error("gompertz_shape: need n_inf > 2 n0 > 0");
    if (doubling_time_days <= 0.0)
        throw param_error("gompertz_shape: doubling time must be positive");
    return std::log(std::log(n_inf / n0) / std::log(n_inf / (2.0 * n0))) / doubling_time_days;
}

}  // namespace chemoplan
