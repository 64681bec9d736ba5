#include "chemoplan/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

namespace chemoplan {

namespace {

std::vector<double> grid_times(const time_grid& grid) {
    std::vector<double> t(grid.n_steps() + 1);
    for (int s = 0; s <= grid.n_steps(); ++s) t[s] = grid.t_days(s);
    return t;
}

void check_pd_inputs(const tumor_params& tumor, const std::vector<drug_params>& drugs,
                     size_t n_drug_series, size_t series_len, const time_grid& grid,
                     const char* who) {
    const size_t n_points = static_cast<size_t>(grid.n_steps()) + 1;
    if (n_drug_series != drugs.size())
        throw sim_error(std::string(who) + ": one concentration series per drug required");
    if (series_len != n_points)
        throw sim_error(std::string(who) + ": concentration series length must be S+1");
    for (const auto& d : drugs)
        if (d.eta_by_type.size() != tumor.cell_types.size())
            throw sim_error(std::string(who) + ": eta_by_type size must match cell types");
}

}  // namespace

trajectory simulate_pk(const drug_params& drug, const std::vector<double>& doses,
                       const time_grid& grid, double c0) {
    const int S = grid.n_steps();
    if (doses.size() != static_cast<size_t>(S) + 1)
        throw sim_error("simulate_pk: doses length must be S+1 = " + std::to_string(S + 1) +
                        ", got " + std::to_string(doses.size()));
    const double h = grid.step_days();
    if (!check_stability(h, drug.xi, stability_kind::pk))
        std::cerr << "warning: simulate_pk: step " << h << " d violates h < 2/xi for drug "
                  << drug.name << "\n";
    trajectory out;
    out.times = grid_times(grid);
    out.values.resize(S + 1);
    out.values[0] = c0;
    for (int s = 0; s < S; ++s)
        out.values[s + 1] =
            out.values[s] - h * drug.xi * out.values[s] + doses[s] / grid.compartment_volume;
    return out;
}

double effective_concentration(double c, double beta_eff) {
    return std::max(0.0, c - beta_eff);
}

std::vector<double> effective_concentration(const drug_params& drug,
                                            const std::vector<double>& concentrations) {
    std::vector<double> out(concentrations.size());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = effective_concentration(concentrations[i], drug.beta_eff);
    return out;
}

std::vector<trajectory> simulate_pd(const tumor_params& tumor, const std::vector<drug_params>& drugs,
                                    const std::vector<trajectory>& concentrations,
                                    const time_grid& grid) {
    std::vector<std::vector<double>> effective(drugs.size());
    for (size_t d = 0; d < drugs.size(); ++d) {
        if (concentrations[d].size() != grid.n_steps() + 1)
            throw sim_error("simulate_pd: concentration series length must be S+1");
        effective[d] = effective_concentration(drugs[d], concentrations[d].values);
    }
    if (concentrations.size() != drugs.size())
        throw sim_error("simulate_pd: one concentration series per drug required");
    return simulate_pd_effective(tumor, drugs, effective, grid);
}

std::vector<trajectory> simulate_pd_effective(const tumor_params& tumor,
                                              const std::vector<drug_params>& drugs,
                                              const std::vector<std::vector<double>>& effective,
                                              const time_grid& grid) {
    const int S = grid.n_steps();
    check_pd_inputs(tumor, drugs, effective.size(),
                    effective.empty() ? static_cast<size_t>(S) + 1 : effective[0].size(), grid,
                    "simulate_pd");
    for (const auto& e : effective)
        if (e.size() != static_cast<size_t>(S) + 1)
            throw sim_error("simulate_pd: concentration series length must be S+1");
    const double h = grid.step_days();
    const size_t Q = tumor.cell_types.size();
    std::vector<trajectory> out(Q);
    for (size_t q = 0; q < Q; ++q) {
        out[q].times = grid_times(grid);
        out[q].values.resize(S + 1);
        out[q].values[0] = std::log(tumor.n0_by_type[q]);
        const double p_inf = std::log(tumor.n_inf_by_type[q]);
        for (int s = 0; s < S; ++s) {
            double kill = 0.0;
            for (size_t d = 0; d < drugs.size(); ++d)
                kill += drugs[d].eta_by_type[q] * std::exp(-drugs[d].rho * grid.t_days(s)) *
                        effective[d][s];
            out[q].values[s + 1] =
                out[q].values[s] + h * (tumor.lambda * (p_inf - out[q].values[s]) - kill);
        }
    }
    return out;
}

trajectory simulate_wbc(const wbc_params& wbc, const std::vector<drug_params>& drugs,
                        const std::vector<std::vector<double>>& day_concentrations, int days) {
    if (day_concentrations.size() != drugs.size())
        throw sim_error("simulate_wbc: one day-concentration series per drug required");
    for (const auto& c : day_concentrations)
        if (c.size() != static_cast<size_t>(days) + 1)
            throw sim_error("simulate_wbc: day-concentration series length must be days+1");
    trajectory out;
    out.times.resize(days + 1);
    out.values.resize(days + 1);
    for (int m = 0; m <= days; ++m) out.times[m] = m;
    out.values[0] = wbc.n_w0;
    for (int m = 0; m < days; ++m) {
        double kill = 0.0;
        if (m >= wbc.delay_days)
            for (size_t d = 0; d < drugs.size(); ++d)
                kill += drugs[d].eta_wbc * day_concentrations[d][m - wbc.delay_days] *
                        out.values[m];
        out.values[m + 1] = out.values[m] + wbc.production - wbc.turnover * out.values[m] - kill;
    }
    return out;
}

bool check_stability(double h_days, double rate_per_day, stability_kind kind) {
    if (rate_per_day <= 0.0)
        throw sim_error(std::string("check_stability: ") +
                        (kind == stability_kind::pk ? "PK" : "PD") + " rate must be positive");
    return h_days < 2.0 / rate_per_day;
}

namespace {

// One RK4 step of the joint (concentration..., log-population...) state.
// Concentrations decay exponentially; populations see Gompertz drift minus
// the time-decaying kill effect of each drug's effective concentration.
struct joint_system {
    const tumor_params* tumor = nullptr;  // null for PK-only integration
    const std::vector<drug_params>* drugs;

    std::vector<double> deriv(double t, const std::vector<double>& x) const {
        const size_t D = drugs->size();
        std::vector<double> dx(x.size());
        for (size_t d = 0; d < D; ++d) dx[d] = -(*drugs)[d].xi * x[d];
        if (tumor) {
            const size_t Q = tumor->cell_types.size();
            for (size_t q = 0; q < Q; ++q) {
                double kill = 0.0;
                for (size_t d = 0; d < D; ++d)
                    kill += (*drugs)[d].eta_by_type[q] * std::exp(-(*drugs)[d].rho * t) *
                            effective_concentration(x[d], (*drugs)[d].beta_eff);
                dx[D + q] = tumor->lambda * (std::log(tumor->n_inf_by_type[q]) - x[D + q]) - kill;
            }
        }
        return dx;
    }

    void rk4_step(double t, double dt, std::vector<double>& x) const {
        auto k1 = deriv(t, x);
        std::vector<double> tmp(x.size());
        for (size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
        auto k2 = deriv(t + 0.5 * dt, tmp);
        for (size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
        auto k3 = deriv(t + 0.5 * dt, tmp);
        for (size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + dt * k3[i];
        auto k4 = deriv(t + dt, tmp);
        for (size_t i = 0; i < x.size(); ++i)
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
};

// Integrates the joint system over the coarse grid, sampling each coarse
// point at its left limit and then applying that step's dose impulse.
std::vector<std::vector<double>> integrate_reference(const joint_system& sys,
                                                     const std::vector<std::vector<double>>& doses,
                                                     const time_grid& grid, double fine_step_days,
                                                     std::vector<double> x0) {
    const int S = grid.n_steps();
    const double h = grid.step_days();
    if (fine_step_days <= 0.0 || fine_step_days > h / 16.0 + 1e-15)
        throw sim_error("rk4_reference: fine step must be positive and at most step/16");
    for (const auto& u : doses)
        if (u.size() != static_cast<size_t>(S) + 1)
            throw sim_error("rk4_reference: doses length must be S+1");
    const int n_sub = static_cast<int>(std::ceil(h / fine_step_days - 1e-12));
    const double dt = h / n_sub;
    std::vector<std::vector<double>> samples(x0.size(), std::vector<double>(S + 1));
    std::vector<double> x = std::move(x0);
    for (int s = 0; s <= S; ++s) {
        for (size_t i = 0; i < x.size(); ++i) samples[i][s] = x[i];
        if (s == S) break;
        for (size_t d = 0; d < doses.size(); ++d) x[d] += doses[d][s] / grid.compartment_volume;
        for (int k = 0; k < n_sub; ++k) sys.rk4_step(grid.t_days(s) + k * dt, dt, x);
    }
    return samples;
}

}  // namespace

trajectory rk4_reference_pk(const drug_params& drug, const std::vector<double>& doses,
                            const time_grid& grid, double fine_step_days) {
    joint_system sys;
    std::vector<drug_params> one{drug};
    sys.drugs = &one;
    auto samples = integrate_reference(sys, {doses}, grid, fine_step_days, {0.0});
    trajectory out;
    out.times = grid_times(grid);
    out.values = std::move(samples[0]);
    return out;
}

std::vector<trajectory> rk4_reference_pd(const tumor_params& tumor,
                                         const std::vector<drug_params>& drugs,
                                         const std::vector<std::vector<double>>& doses,
                                         const time_grid& grid, double fine_step_days) {
    check_pd_inputs(tumor, drugs, doses.size(),
                    doses.empty() ? static_cast<size_t>(grid.n_steps()) + 1 : doses[0].size(),
                    grid, "rk4_reference_pd");
    joint_system sys;
    sys.tumor = &tumor;
    sys.drugs = &drugs;
    std::vector<double> x0(drugs.size() + tumor.cell_types.size(), 0.0);
    for (size_t q = 0; q < tumor.cell_types.size(); ++q)
        x0[drugs.size() + q] = std::log(tumor.n0_by_type[q]);
    auto samples = integrate_reference(sys, doses, grid, fine_step_days, std::move(x0));
    std::vector<trajectory> out(tumor.cell_types.size());
    for (size_t q = 0; q < out.size(); ++q) {
        out[q].times = grid_times(grid);
        out[q].values = std::move(samples[drugs.size() + q]);
    }
    return out;
}

double euler_error_bound(const time_grid& grid, double lipschitz_g, double lipschitz_f,
                         double alpha_z, double alpha_y) {
    if (lipschitz_g <= 0.0 || lipschitz_f <= 0.0)
        throw sim_error("euler_error_bound: Lipschitz constants must be positive");
    if (alpha_z < 0.0 || alpha_y < 0.0)
        throw sim_error("euler_error_bound: curvature bounds must be nonnegative");
    const double h = grid.step_days();
    const double T = grid.horizon_days;
    return 0.5 * h *
           (alpha_z / lipschitz_g * (std::exp(lipschitz_g * T) - 1.0) + alpha_y / lipschitz_f) *
           (std::exp(lipschitz_f * T) - 1.0);
}

double estimate_curvature(const std::vector<double>& values, double dt,
                          const std::vector<int>& exclude) {
    if (values.size() < 3) throw sim_error("estimate_curvature: need at least 3 samples");
    if (dt <= 0.0) throw sim_error("estimate_curvature: dt must be positive");
    double worst = 0.0;
    for (size_t i = 1; i + 1 < values.size(); ++i) {
        bool skip = false;
        for (int e : exclude)
            if (std::abs(static_cast<long>(i) - static_cast<long>(e)) <= 1) skip = true;
        if (skip) continue;
        worst = std::max(worst, std::abs(values[i + 1] - 2.0 * values[i] + values[i - 1]));
    }
    return worst / (dt * dt);
}

void save_trajectory_csv(const trajectory& traj, const std::string& value_name,
                         const std::string& path) {
    save_trajectories_csv({traj}, {value_name}, path);
}

void save_trajectories_csv(const std::vector<trajectory>& trajs,
                           const std::vector<std::string>& value_names, const std::string& path) {
    if (trajs.empty() || trajs.size() != value_names.size())
        throw sim_error("save_trajectories_csv: one name per trajectory required");
    for (const auto& t : trajs)
        if (t.times != trajs[0].times)
            throw sim_error("save_trajectories_csv: trajectories must share one time grid");
    std::ofstream out(path);
    if (!out) throw sim_error("cannot write trajectory file: " + path);
    out << "t_days";
    for (const auto& n : value_names) out << "," << n;
    out << "\n";
    out.precision(std::numeric_limits<double>::max_digits10);
    for (int i = 0; i < trajs[0].size(); ++i) {
        out << trajs[0].times[i];
        for (const auto& t : trajs) out << "," << t.values[i];
        out << "\n";
    }
    if (!out) throw sim_error("write failed: " + path);
}

}  // namespace chemoplan
