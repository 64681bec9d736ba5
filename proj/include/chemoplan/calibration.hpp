#pragma once

// Estimates kill-effect parameters from published trial outcomes: a clinical
// regimen is expanded into an effective-concentration trajectory, the final
// log tumor burden is affine in the kill parameter along that trajectory,
// and a bisection over the response margin matches the simulated partial
// response rate (fraction of perturbed patients whose tumor diameter at
// least halves) to the reported one. Also provides the Gompertz shape
// estimator from a doubling time.

#include <cstdint>
#include <vector>

#include "chemoplan/domain.hpp"
#include "chemoplan/dynamics.hpp"

namespace chemoplan {

// Drift-only growth context for the affine solve.
struct drift_params {
    double p0 = 0.0;        // initial log population
    double lambda = 0.0;    // Gompertz shape, 1/day
    double ln_n_inf = 0.0;  // log asymptotic population
};

// Expands a regimen into per-step doses on the grid: dose_per_admin scaled
// by body surface, administered at the regimen's within-day hours on the
// leading on-days of every cycle. The grid must span the full trial horizon.
std::vector<double> regimen_doses(const regimen_spec& spec, const time_grid& grid);

// regimen_doses followed by the PK recursion and the effectiveness
// threshold.
trajectory regimen_to_effective_concentration(const regimen_spec& spec, const drug_params& drug,
                                              const time_grid& grid);

// Along a fixed effective-concentration trajectory the final log burden of
// patient k is affine in the kill parameter: P_S = A - (eta + eps_k) W with
// A the drift-only endpoint and W the drift-propagated exposure sum.
// Returns the eta that places the mean final log burden at target_mean.
// Throws sim_error when the exposure sum vanishes (eta unidentifiable).
double solve_eta_for_delta(const trajectory& effective, const drift_params& drift,
                           const std::vector<double>& perturbations, double target_mean);

struct calibration_result {
    double eta = 0.0;           // calibrated kill parameter, m^3/(g day)
    double achieved_prr = 0.0;  // simulated partial response rate at eta
    double delta = 0.0;         // response margin the bisection settled on
    int bisection_steps = 0;
};

// Calibrates the kill parameter of one drug against a regimen's partial
// response rate. Patient variability enters as per-patient perturbations
// eps_k = sigma_frac * eta_current * z_k with one standard normal draw z_k
// per patient (fixed for the whole run, seeded), rescaled to the current
// eta iterate on every bisection step. The bisection adjusts the margin
// delta of the mean final log burden above the response threshold
// P' = ln(n0 / 8) until |simulated PRR - spec.prr| <= 0.01. The temporal
// resistance decay is ignored here (rho plays no role in the affine form).
// With sigma_frac = 0 the perturbations vanish and the simulated response
// rate degenerates to a step function, so the eta placing the mean exactly
// at P' is returned directly. Uses the drug's defaults for the trial grid:
// one-hour steps over the full trial horizon, standard body surface and
// compartment volume. Throws sim_error when no bracket contains the target
// rate (reporting the achievable range).
calibration_result calibrate_kill_effect(const regimen_spec& spec, const drug_params& drug,
                                         const tumor_params& tumor, int trials = 1000,
                                         double sigma_frac = 0.10, std::uint64_t seed = 1);

// Gompertz shape from a population doubling time:
// lambda = (1/t_double) ln( ln(n_inf/n0) / ln(n_inf/(2 n0)) ).
// Requires n_inf > 2 n0 and a positive doubling time.
double gompertz_shape(double n0, double n_inf, double doubling_time_days);

}  // namespace chemoplan
