#pragma once

// Forward simulation of the treatment dynamics: drug concentration (PK),
// log cell populations (PD), and the white blood cell count, all via the
// explicit Euler recursions the planning models are built from, plus a
// high-accuracy Runge-Kutta reference integrator and the analytic global
// error bound used to certify the Euler discretization.

#include <stdexcept>
#include <string>
#include <vector>

#include "chemoplan/domain.hpp"

namespace chemoplan {

class sim_error : public std::runtime_error {
  public:
    explicit sim_error(const std::string& what) : std::runtime_error(what) {}
};

// One state sampled on a time grid. Times are in days and strictly increase.
struct trajectory {
    std::vector<double> times;
    std::vector<double> values;

    int size() const { return static_cast<int>(times.size()); }
};

// Drug concentration under Euler's recursion:
//   C_0 = c0 (normally 0),  C_{s+1} = C_s - h xi C_s + U_s / volume.
// doses holds the administered mass (g) per step and must have S+1 entries
// (the final entry cannot influence the trajectory). Warns on stderr when
// the step violates the stability condition h < 2/xi.
trajectory simulate_pk(const drug_params& drug, const std::vector<double>& doses,
                       const time_grid& grid, double c0 = 0.0);

// Concentration above the therapeutic threshold: max(0, c - beta_eff).
double effective_concentration(double c, double beta_eff);
std::vector<double> effective_concentration(const drug_params& drug,
                                            const std::vector<double>& concentrations);

// Log cell populations under Euler's recursion:
//   P_{q,0} = ln n0_q,
//   P_{q,s+1} = P_{q,s} + h (lambda (ln n_inf_q - P_{q,s})
//                            - sum_d eta_{d,q} e^{-rho_d t(s)} E_{d,s}).
// simulate_pd derives E from raw concentrations via each drug's beta_eff;
// simulate_pd_effective takes the effective concentrations directly.
std::vector<trajectory> simulate_pd(const tumor_params& tumor, const std::vector<drug_params>& drugs,
                                    const std::vector<trajectory>& concentrations,
                                    const time_grid& grid);
std::vector<trajectory> simulate_pd_effective(const tumor_params& tumor,
                                              const std::vector<drug_params>& drugs,
                                              const std::vector<std::vector<double>>& effective,
                                              const time_grid& grid);

// White blood cell count at day resolution (step = 1 day):
//   N_{m+1} = N_m + production - turnover N_m        for m < delay,
//   N_{m+1} = N_m + production - turnover N_m
//                 - sum_d eta_wbc_d C_{d,m-delay} N_m  for m >= delay.
// day_concentrations holds one per-day concentration (g/m^3) per drug,
// sampled at day starts, with days+1 entries each.
trajectory simulate_wbc(const wbc_params& wbc, const std::vector<drug_params>& drugs,
                        const std::vector<std::vector<double>>& day_concentrations, int days);

// Explicit Euler absolute stability for the decay part of the dynamics:
// true iff h < 2/rate. kind only labels error messages.
enum class stability_kind { pk, pd };
bool check_stability(double h_days, double rate_per_day, stability_kind kind);

// Classical 4th-order Runge-Kutta reference solutions of the continuous
// dynamics with impulse dosing: the concentration jumps by U_s/volume at
// t(s) immediately after that instant is sampled, and decays smoothly in
// between. Outputs are sampled on the coarse grid (left limits), so they
// are directly comparable with the Euler recursions above.
// fine_step_days must be at most grid.step_days()/16.
trajectory rk4_reference_pk(const drug_params& drug, const std::vector<double>& doses,
                            const time_grid& grid, double fine_step_days);
std::vector<trajectory> rk4_reference_pd(const tumor_params& tumor,
                                         const std::vector<drug_params>& drugs,
                                         const std::vector<std::vector<double>>& doses,
                                         const time_grid& grid, double fine_step_days);

// Global error bound for Euler's method applied to a state y whose dynamics
// depend on another Euler-approximated state z (z' = g(t,z), y' = f(t,y,z)):
//   (h/2) (alpha_z/L_g (e^{L_g T} - 1) + alpha_y/L_f) (e^{L_f T} - 1)
// with T the grid horizon. For the treatment dynamics, z is a drug
// concentration (L_g = xi) and y a log population (L_f = max(eta_q, lambda)).
// Curvature bounds alpha are maxima of |second derivative| over [0, T].
double euler_error_bound(const time_grid& grid, double lipschitz_g, double lipschitz_f,
                         double alpha_z, double alpha_y);

// Curvature estimate from a finely sampled trajectory:
//   max_i |v_{i+1} - 2 v_i + v_{i-1}| / dt^2.
// Indices in exclude (and their immediate neighbors) are skipped so that
// dosing impulses, which are jumps rather than curvature, do not enter.
double estimate_curvature(const std::vector<double>& values, double dt,
                          const std::vector<int>& exclude = {});

// CSV export, one `t_days,<name>` column pair (or several value columns for
// the multi-trajectory form; all trajectories must share one time grid).
void save_trajectory_csv(const trajectory& traj, const std::string& value_name,
                         const std::string& path);
void save_trajectories_csv(const std::vector<trajectory>& trajs,
                           const std::vector<std::string>& value_names, const std::string& path);

}  // namespace chemoplan
