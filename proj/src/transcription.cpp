#include "chemoplan/transcription.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chemoplan/dynamics.hpp"

namespace chemoplan {

namespace {

std::string tag(const char* stem, char k1, int v1) {
    std::string s(stem);
    s += '_';
    s += k1;
    s += std::to_string(v1);
    return s;
}

std::string tag(const char* stem, char k1, int v1, char k2, int v2) {
    std::string s = tag(stem, k1, v1);
    s += '_';
    s += k2;
    s += std::to_string(v2);
    return s;
}

std::string tag(const char* stem, char k1, int v1, char k2, int v2, char k3, int v3) {
    std::string s = tag(stem, k1, v1, k2, v2);
    s += '_';
    s += k3;
    s += std::to_string(v3);
    return s;
}

// Variable names shared by the builder and extract_plan.
std::string u_name(int d, int s) { return tag("U", 'd', d, 's', s); }
std::string c_name(int d, int s) { return tag("C", 'd', d, 's', s); }
std::string e_name(int d, int s) { return tag("E", 'd', d, 's', s); }
std::string ze_name(int d, int s) { return tag("ZE", 'd', d, 's', s); }
std::string p_name(bool chance, int k, int q, int s) {
    return chance ? tag("P", 'k', k + 1, 'q', q, 's', s) : tag("P", 'q', q, 's', s);
}
std::string nw_name(int m) { return tag("NW", 'm', m); }
std::string nneu_name(int s) { return tag("NNEU", 's', s); }
std::string nlym_name(int s) { return tag("NLYM", 's', s); }
std::string b_name(int d, int m) { return tag("B", 'd', d, 'm', m); }
std::string v_name(int d, int m, int l) { return tag("V", 'd', d, 'm', m, 'l', l); }
std::string zw_name(int m, int l) { return tag("ZW", 'm', m, 'l', l); }
std::string zpill_name(int d, int s) { return tag("ZPILL", 'd', d, 's', s); }
std::string zrest_name(int d, int m) { return tag("ZREST", 'd', d, 'm', m); }
std::string zsurg_name(int k) { return tag("ZSURG", 'k', k + 1); }

int pill_cap(const drug_params& drug, double bsa) {
    return static_cast<int>(std::floor(drug.beta_rate * bsa / *drug.pill_mass + 1e-9));
}

struct model_builder {
    const model_params& p;
    const build_options& opt;
    bool chance = false;

    // initial log populations per trajectory (one entry for the
    // deterministic build, one per scenario otherwise) and probabilities
    std::vector<std::vector<double>> logs0;
    std::vector<double> probs;

    milp_model m;
    int S = 0, spd = 0, M = 0, tau = 0, D = 0, Q = 0, K = 0;
    double h = 0.0, vol = 0.0, bsa = 0.0;
    // white-cell quantities in units of opt.wbc_scale cells/m^3
    double nw0 = 0.0, bw = 0.0, bneu = 0.0, blym = 0.0, prod = 0.0, nu = 0.0;
    double width = 0.0;          // discrete level width
    std::vector<double> cmax;    // per-drug concentration cap, g/m^3

    std::vector<std::vector<int>> u_, c_, e_, ze_;         // [d][s]
    std::vector<std::vector<std::vector<int>>> p_;         // [traj][q][s]
    std::vector<int> nw_, nneu_, nlym_, zsurg_;
    std::vector<std::vector<int>> b_, zrest_, zpill_;      // [d][m] / [d][s]
    std::vector<std::vector<int>> zw_;                     // [m][l]
    std::vector<std::vector<std::vector<int>>> v_;         // [d][m][l-1]

    model_builder(const model_params& params, const build_options& options)
        : p(params), opt(options) {}

    void check_inputs() {
        validate(p);
        if (opt.wbc_scale <= 0.0)
            throw milp_error("wbc_scale must be positive");
        if (opt.wbc_levels < 1)
            throw milp_error("discrete white-cell linearization needs at least one level");
        h = p.grid.step_days();
        for (const auto& d : p.drugs) {
            if (!check_stability(h, d.xi, stability_kind::pk)) {
                std::ostringstream os;
                os << "time step " << h << " days is unstable for the elimination rate of "
                   << d.name << " (" << d.xi << "/day); need h < " << 2.0 / d.xi;
                throw milp_error(os.str());
            }
        }
        if (!check_stability(h, p.tumor.lambda, stability_kind::pd)) {
            std::ostringstream os;
            os << "time step " << h << " days is unstable for the tumor drift rate "
               << p.tumor.lambda << "/day";
            throw milp_error(os.str());
        }
        if (!check_stability(1.0, p.wbc.turnover, stability_kind::pd))
            throw milp_error("one-day white-cell step is unstable for turnover rate " +
                             std::to_string(p.wbc.turnover));
        if (chance) {
            if (!opt.scenarios || opt.scenarios->scenarios.empty())
                throw milp_error("chance-constrained build needs a non-empty scenario set");
            if (opt.epsilon < 0.0 || opt.epsilon >= 1.0)
                throw milp_error("epsilon must lie in [0, 1)");
            if (opt.n_surg <= 0.0)
                throw milp_error("surgical cell count threshold must be positive");
            const auto& set = *opt.scenarios;
            if (set.n_types() != static_cast<int>(p.tumor.cell_types.size()))
                throw milp_error("scenario set and tumor parameters disagree on the cell types");
            for (size_t q = 0; q < set.type_names.size(); ++q) {
                if (set.type_names[q] != p.tumor.cell_types[q].name)
                    throw milp_error("scenario column '" + set.type_names[q] +
                                     "' does not match cell type '" +
                                     p.tumor.cell_types[q].name + "'");
            }
        }
    }

    void set_dimensions() {
        S = p.grid.n_steps();
        spd = p.grid.steps_per_day();
        M = p.grid.horizon_days;
        tau = p.grid.wbc_lag_days;
        D = static_cast<int>(p.drugs.size());
        Q = static_cast<int>(p.tumor.cell_types.size());
        K = opt.wbc_levels;
        vol = p.grid.compartment_volume;
        bsa = p.grid.body_surface;
        nw0 = p.wbc.n_w0 / opt.wbc_scale;
        bw = p.wbc.beta_w() / opt.wbc_scale;
        bneu = p.wbc.beta_neu / opt.wbc_scale;
        blym = p.wbc.beta_lym / opt.wbc_scale;
        prod = p.wbc.production / opt.wbc_scale;
        nu = p.wbc.turnover;
        width = (nw0 - bw) / K;
        cmax.clear();
        for (const auto& d : p.drugs) cmax.push_back(d.beta_conc / vol);

        if (chance) {
            for (const auto& sc : opt.scenarios->scenarios) {
                logs0.push_back(sc.log_pops);
                probs.push_back(sc.prob);
            }
        } else {
            std::vector<double> l0(Q);
            for (int q = 0; q < Q; ++q) l0[q] = std::log(p.tumor.n0_by_type[q]);
            logs0.push_back(l0);
            probs.push_back(1.0);
        }
    }

    void make_variables() {
        const int n_traj = static_cast<int>(logs0.size());
        u_.assign(D, {});
        c_.assign(D, {});
        e_.assign(D, {});
        ze_.assign(D, std::vector<int>(S + 1, -1));
        for (int d = 0; d < D; ++d) {
            for (int s = 0; s <= S; ++s) {
                // the dose at the final grid point never enters the dynamics
                double ub = (s == S) ? 0.0 : milp_inf;
                u_[d].push_back(m.add_var(u_name(d, s), var_kind::continuous, 0.0, ub));
            }
            for (int s = 0; s <= S; ++s)
                c_[d].push_back(m.add_var(c_name(d, s), var_kind::continuous, 0.0, milp_inf));
            for (int s = 0; s <= S; ++s)
                e_[d].push_back(m.add_var(e_name(d, s), var_kind::continuous, 0.0, milp_inf));
            if (p.drugs[d].beta_eff > 0.0) {
                for (int s = 1; s <= S; ++s)
                    ze_[d][s] = m.add_var(ze_name(d, s), var_kind::binary, 0.0, 1.0);
            }
        }
        p_.assign(n_traj, std::vector<std::vector<int>>(Q));
        for (int k = 0; k < n_traj; ++k)
            for (int q = 0; q < Q; ++q)
                for (int s = 0; s <= S; ++s)
                    p_[k][q].push_back(
                        m.add_var(p_name(chance, k, q, s), var_kind::continuous, -milp_inf, milp_inf));
        for (int mm = 0; mm <= M; ++mm) {
            double lo = (mm == 0) ? nw0 : bw;
            double hi = nw0;
            nw_.push_back(m.add_var(nw_name(mm), var_kind::continuous, lo, hi));
        }
        for (int s = 0; s <= S; ++s)
            nneu_.push_back(m.add_var(nneu_name(s), var_kind::continuous, bneu, milp_inf));
        for (int s = 0; s <= S; ++s)
            nlym_.push_back(m.add_var(nlym_name(s), var_kind::continuous, blym, milp_inf));
        b_.assign(D, {});
        for (int d = 0; d < D; ++d)
            for (int mm = 0; mm < M; ++mm)
                b_[d].push_back(m.add_var(b_name(d, mm), var_kind::continuous, 0.0, milp_inf));
        if (opt.bilinear == bilinear_mode::discrete) {
            zw_.assign(M, {});
            for (int mm = 0; mm < M; ++mm)
                for (int l = 0; l <= K; ++l)
                    zw_[mm].push_back(m.add_var(zw_name(mm, l), var_kind::binary, 0.0, 1.0));
            v_.assign(D, std::vector<std::vector<int>>(M));
            for (int d = 0; d < D; ++d)
                for (int mm = 0; mm < M; ++mm)
                    for (int l = 1; l <= K; ++l)
                        v_[d][mm].push_back(
                            m.add_var(v_name(d, mm, l), var_kind::continuous, 0.0, milp_inf));
        }
        zpill_.assign(D, std::vector<int>(S + 1, -1));
        for (int d = 0; d < D; ++d) {
            if (!p.drugs[d].is_oral()) continue;
            int cap = pill_cap(p.drugs[d], bsa);
            for (int s : p.grid.meal_steps())
                zpill_[d][s] = m.add_var(zpill_name(d, s), var_kind::integer, 0.0, cap);
        }
        zrest_.assign(D, {});
        for (int d = 0; d < D; ++d) {
            if (!p.drugs[d].rest_days) continue;
            for (int mm = 0; mm < M; ++mm)
                zrest_[d].push_back(m.add_var(zrest_name(d, mm), var_kind::binary, 0.0, 1.0));
        }
        if (chance)
            for (int k = 0; k < n_traj; ++k)
                zsurg_.push_back(m.add_var(zsurg_name(k), var_kind::binary, 0.0, 1.0));
    }

    void add_pk() {
        for (int d = 0; d < D; ++d) {
            m.add_row(tag("C0", 'd', d), {{c_[d][0], 1.0}}, row_sense::eq, 0.0);
            const double decay = 1.0 - h * p.drugs[d].xi;
            for (int s = 0; s < S; ++s)
                m.add_row(tag("PK", 'd', d, 's', s),
                          {{c_[d][s + 1], 1.0}, {c_[d][s], -decay}, {u_[d][s], -1.0 / vol}},
                          row_sense::eq, 0.0);
        }
    }

    void add_pd() {
        const double lam = p.tumor.lambda;
        for (int k = 0; k < static_cast<int>(p_.size()); ++k) {
            for (int q = 0; q < Q; ++q) {
                std::string p0 = chance ? tag("P0", 'k', k + 1, 'q', q) : tag("P0", 'q', q);
                m.add_row(p0, {{p_[k][q][0], 1.0}}, row_sense::eq, logs0[k][q]);
                const double drift = h * lam * std::log(p.tumor.n_inf_by_type[q]);
                for (int s = 0; s < S; ++s) {
                    std::vector<lin_term> terms{{p_[k][q][s + 1], 1.0},
                                                {p_[k][q][s], -(1.0 - h * lam)}};
                    for (int d = 0; d < D; ++d) {
                        double kill = h * p.drugs[d].eta_by_type[q] *
                                      std::exp(-p.drugs[d].rho * p.grid.t_days(s));
                        terms.push_back({e_[d][s], kill});
                    }
                    std::string nm = chance ? tag("PD", 'k', k + 1, 'q', q, 's', s)
                                            : tag("PD", 'q', q, 's', s);
                    m.add_row(nm, std::move(terms), row_sense::eq, drift);
                }
            }
        }
    }

    void add_effect() {
        for (int d = 0; d < D; ++d) {
            const double be = p.drugs[d].beta_eff;
            if (be > 0.0) {
                m.add_row(tag("E0", 'd', d), {{e_[d][0], 1.0}}, row_sense::eq, 0.0);
                for (int s = 1; s <= S; ++s) {
                    m.add_row(tag("EBL", 'd', d, 's', s), {{e_[d][s], 1.0}, {c_[d][s], -1.0}},
                              row_sense::ge, -be);
                    m.add_row(tag("EBZ", 'd', d, 's', s),
                              {{e_[d][s], 1.0}, {ze_[d][s], -cmax[d]}}, row_sense::le, 0.0);
                    m.add_row(tag("EBU", 'd', d, 's', s),
                              {{e_[d][s], 1.0}, {c_[d][s], -1.0}, {ze_[d][s], cmax[d]}},
                              row_sense::le, cmax[d] - be);
                }
            } else {
                for (int s = 0; s <= S; ++s)
                    m.add_row(tag("EEQ", 'd', d, 's', s), {{e_[d][s], 1.0}, {c_[d][s], -1.0}},
                              row_sense::eq, 0.0);
            }
        }
    }

    void add_operations() {
        for (int d = 0; d < D; ++d) {
            const auto& drug = p.drugs[d];
            for (int s = 0; s <= S; ++s)
                m.add_row(tag("CMAX", 'd', d, 's', s), {{c_[d][s], 1.0}}, row_sense::le, cmax[d]);
            const double rate_cap = drug.is_oral() ? drug.beta_rate * bsa
                                                   : drug.beta_rate * bsa * p.grid.step_hours;
            for (int s = 0; s < S; ++s)
                m.add_row(tag("UMAX", 'd', d, 's', s), {{u_[d][s], 1.0}}, row_sense::le, rate_cap);
            if (drug.is_oral()) {
                for (int s = 0; s < S; ++s) {
                    if (zpill_[d][s] >= 0)
                        m.add_row(tag("PILL", 'd', d, 's', s),
                                  {{u_[d][s], 1.0}, {zpill_[d][s], -*drug.pill_mass}},
                                  row_sense::eq, 0.0);
                    else
                        m.add_row(tag("NOPILL", 'd', d, 's', s), {{u_[d][s], 1.0}},
                                  row_sense::eq, 0.0);
                }
            }
            const double cum_cap = drug.beta_cum * bsa;
            for (int mm = 0; mm < M; ++mm) {
                std::vector<lin_term> terms;
                for (int s = mm * spd; s < (mm + 1) * spd; ++s) terms.push_back({u_[d][s], 1.0});
                if (!zrest_[d].empty()) terms.push_back({zrest_[d][mm], cum_cap});
                m.add_row(tag("DCUM", 'd', d, 'm', mm), std::move(terms), row_sense::le, cum_cap);
            }
            if (!zrest_[d].empty()) {
                for (int mm = 0; mm < M; ++mm) {
                    int L = std::min(*drug.rest_days, M - 1 - mm);
                    if (L < 1) continue;
                    std::vector<lin_term> terms;
                    for (int l = 0; l <= L; ++l) terms.push_back({zrest_[d][mm + l], 1.0});
                    m.add_row(tag("REST", 'd', d, 'm', mm), std::move(terms), row_sense::ge,
                              static_cast<double>(L));
                }
            }
        }
    }

    // Index of the concentration variable feeding the bilinear kill on day m,
    // or -1 when the delayed day precedes the treatment start (zero by
    // convention, which forces the kill term of that day to zero).
    int delayed_conc(int d, int mm) const {
        if (mm < tau) return -1;
        return c_[d][p.grid.day_start_step(mm - tau)];
    }

    void add_wbc() {
        for (int mm = 0; mm < M; ++mm) {
            std::vector<lin_term> terms{{nw_[mm + 1], 1.0}, {nw_[mm], -(1.0 - nu)}};
            for (int d = 0; d < D; ++d) terms.push_back({b_[d][mm], p.drugs[d].eta_wbc});
            m.add_row(tag("WREC", 'm', mm), std::move(terms), row_sense::eq, prod);
        }
        if (opt.bilinear == bilinear_mode::discrete)
            add_wbc_discrete();
        else
            add_wbc_mccormick();
    }

    void add_wbc_discrete() {
        for (int mm = 0; mm < M; ++mm) {
            std::vector<lin_term> up{{nw_[mm], 1.0}};
            std::vector<lin_term> dn{{nw_[mm], -1.0}};
            std::vector<lin_term> sum;
            for (int l = 0; l <= K; ++l) {
                if (l >= 1) {
                    up.push_back({zw_[mm][l], -l * width});
                    dn.push_back({zw_[mm][l], l * width});
                }
                sum.push_back({zw_[mm][l], 1.0});
            }
            m.add_row(tag("WLEVU", 'm', mm), std::move(up), row_sense::le, bw + width / 2.0);
            m.add_row(tag("WLEVL", 'm', mm), std::move(dn), row_sense::le, -bw + width / 2.0);
            m.add_row(tag("WZSUM", 'm', mm), std::move(sum), row_sense::eq, 1.0);
        }
        for (int d = 0; d < D; ++d) {
            for (int mm = 0; mm < M; ++mm) {
                std::vector<lin_term> def{{b_[d][mm], 1.0}};
                for (int l = 1; l <= K; ++l) def.push_back({v_[d][mm][l - 1], -(bw + l * width)});
                m.add_row(tag("BDEF", 'd', d, 'm', mm), std::move(def), row_sense::eq, 0.0);
                const int cs = delayed_conc(d, mm);
                for (int l = 1; l <= K; ++l) {
                    const int vv = v_[d][mm][l - 1];
                    m.add_row(tag("VZ", 'd', d, 'm', mm, 'l', l),
                              {{vv, 1.0}, {zw_[mm][l], -cmax[d]}}, row_sense::le, 0.0);
                    std::vector<lin_term> vc{{vv, 1.0}};
                    if (cs >= 0) vc.push_back({cs, -1.0});
                    m.add_row(tag("VC", 'd', d, 'm', mm, 'l', l), std::move(vc), row_sense::le,
                              0.0);
                    std::vector<lin_term> vcz{{vv, 1.0}, {zw_[mm][l], -cmax[d]}};
                    if (cs >= 0) vcz.push_back({cs, -1.0});
                    m.add_row(tag("VCZ", 'd', d, 'm', mm, 'l', l), std::move(vcz), row_sense::ge,
                              -cmax[d]);
                    m.add_row(tag("VPOS", 'd', d, 'm', mm, 'l', l), {{vv, 1.0}}, row_sense::ge,
                              0.0);
                }
            }
        }
    }

    void add_wbc_mccormick() {
        for (int d = 0; d < D; ++d) {
            for (int mm = 0; mm < M; ++mm) {
                const int cs = delayed_conc(d, mm);
                const int bb = b_[d][mm];
                std::vector<lin_term> l1{{bb, 1.0}};
                if (cs >= 0) l1.push_back({cs, -bw});
                m.add_row(tag("MCL1", 'd', d, 'm', mm), std::move(l1), row_sense::ge, 0.0);
                std::vector<lin_term> l2{{bb, 1.0}, {nw_[mm], -cmax[d]}};
                if (cs >= 0) l2.push_back({cs, -nw0});
                m.add_row(tag("MCL2", 'd', d, 'm', mm), std::move(l2), row_sense::ge,
                          -nw0 * cmax[d]);
                std::vector<lin_term> u1{{bb, 1.0}};
                if (cs >= 0) u1.push_back({cs, -nw0});
                m.add_row(tag("MCU1", 'd', d, 'm', mm), std::move(u1), row_sense::le, 0.0);
                std::vector<lin_term> u2{{bb, 1.0}, {nw_[mm], -cmax[d]}};
                if (cs >= 0) u2.push_back({cs, -bw});
                m.add_row(tag("MCU2", 'd', d, 'm', mm), std::move(u2), row_sense::le,
                          -bw * cmax[d]);
            }
        }
    }

    void add_toxicity() {
        for (int s = 0; s <= S; ++s) {
            const int day = p.grid.day_of_step(s);
            m.add_row(tag("NNEUEQ", 's', s), {{nneu_[s], 1.0}, {nw_[day], -p.wbc.theta_neu}},
                      row_sense::eq, 0.0);
            m.add_row(tag("NLYMEQ", 's', s), {{nlym_[s], 1.0}, {nw_[day], -p.wbc.theta_lym}},
                      row_sense::eq, 0.0);
        }
    }

    void add_chance() {
        const int n_scen = static_cast<int>(logs0.size());
        const double p_surg = std::log(opt.n_surg);
        for (int k = 0; k < n_scen; ++k) {
            double total = 0.0;
            for (int q = 0; q < Q; ++q) total += std::exp(logs0[k][q]);
            for (int q = 0; q < Q; ++q) {
                // per-type threshold: the scenario clears surgery when each
                // type falls below its share of the total surgical count;
                // shaved by 1e-7 so solver-tolerance-level slack cannot push
                // a re-simulated count past the true threshold
                const double target = p_surg + (logs0[k][q] - std::log(total)) - 1e-7;
                const double big_m =
                    std::max(std::log(p.tumor.n_inf_by_type[q]) - target, 0.0);
                m.add_row(tag("SURG", 'k', k + 1, 'q', q),
                          {{p_[k][q][S], 1.0}, {zsurg_[k], big_m}}, row_sense::le,
                          target + big_m);
            }
        }
        std::vector<lin_term> knap;
        for (int k = 0; k < n_scen; ++k) knap.push_back({zsurg_[k], probs[k]});
        m.add_row("KNAP", std::move(knap), row_sense::ge, 1.0 - opt.epsilon);
    }

    void set_objective() {
        if (chance && opt.objective == objective_mode::probability) {
            for (int k = 0; k < static_cast<int>(zsurg_.size()); ++k)
                m.add_objective_term(zsurg_[k], -probs[k]);
        } else {
            for (int q = 0; q < Q; ++q) m.add_objective_term(p_[0][q][S], 1.0);
        }
    }

    transcribed_model build() {
        check_inputs();
        set_dimensions();
        m.name = chance ? "chemo_chance" : "chemo_plan";
        make_variables();
        add_pk();
        add_pd();
        add_effect();
        add_operations();
        add_wbc();
        add_toxicity();
        if (chance) add_chance();
        set_objective();
        m.check();
        transcribed_model out;
        out.milp = std::move(m);
        out.params = p;
        out.options = opt;
        out.n_scenarios = chance ? static_cast<int>(logs0.size()) : 0;
        out.initial_log_pops = logs0[0];
        return out;
    }
};

}  // namespace

transcribed_model build_deterministic(const model_params& params, const build_options& options) {
    model_builder b(params, options);
    b.chance = false;
    return b.build();
}

transcribed_model build_chance_constrained(const model_params& params,
                                           const build_options& options) {
    model_builder b(params, options);
    b.chance = true;
    return b.build();
}

treatment_plan extract_plan(const transcribed_model& model,
                            const std::map<std::string, double>& solution) {
    const auto& p = model.params;
    const auto& grid = p.grid;
    const bool chance = model.n_scenarios > 0;
    const int S = grid.n_steps();
    const int M = grid.horizon_days;
    const int D = static_cast<int>(p.drugs.size());
    const int Q = static_cast<int>(p.tumor.cell_types.size());
    const double scale = model.options.wbc_scale;

    for (const auto& var : model.milp.variables) {
        auto it = solution.find(var.name);
        if (it == solution.end())
            throw milp_error("solution does not cover variable " + var.name);
        if (var.kind != var_kind::continuous &&
            std::fabs(it->second - std::round(it->second)) > 1e-6)
            throw milp_error("variable " + var.name + " violates integrality: " +
                             std::to_string(it->second));
    }
    auto val = [&](const std::string& name) { return solution.at(name); };

    treatment_plan plan;
    plan.doses.assign(D, std::vector<double>(S + 1, 0.0));
    plan.pills.assign(D, std::vector<int>(S + 1, 0));
    plan.concentrations.assign(D, std::vector<double>(S + 1, 0.0));
    for (int d = 0; d < D; ++d) {
        for (int s = 0; s <= S; ++s) {
            plan.doses[d][s] = std::max(0.0, val(u_name(d, s)));
            plan.concentrations[d][s] = val(c_name(d, s));
        }
        if (p.drugs[d].is_oral()) {
            const double pill = *p.drugs[d].pill_mass;
            for (int s : grid.meal_steps()) {
                int count = static_cast<int>(std::round(val(zpill_name(d, s))));
                if (std::fabs(plan.doses[d][s] - count * pill) > 1e-6)
                    throw milp_error("dose of " + p.drugs[d].name + " at step " +
                                     std::to_string(s) + " is not a whole pill count");
                plan.pills[d][s] = count;
                plan.doses[d][s] = count * pill;
            }
        }
    }

    // independent re-simulation from the recovered doses
    std::vector<trajectory> pk(D);
    for (int d = 0; d < D; ++d) {
        pk[d] = simulate_pk(p.drugs[d], plan.doses[d], grid);
        for (int s = 0; s <= S; ++s)
            plan.max_concentration_error =
                std::max(plan.max_concentration_error,
                         std::fabs(pk[d].values[s] - plan.concentrations[d][s]));
    }

    const int n_traj = chance ? model.n_scenarios : 1;
    std::vector<std::vector<double>> scen_logs;
    if (chance)
        for (const auto& sc : model.options.scenarios->scenarios) scen_logs.push_back(sc.log_pops);
    else
        scen_logs.push_back(model.initial_log_pops);

    for (int k = 0; k < n_traj; ++k) {
        tumor_params tumor = p.tumor;
        for (int q = 0; q < Q; ++q) tumor.n0_by_type[q] = std::exp(scen_logs[k][q]);
        std::vector<trajectory> pd = simulate_pd(tumor, p.drugs, pk, grid);
        std::vector<std::vector<double>> logs(Q, std::vector<double>(S + 1, 0.0));
        for (int q = 0; q < Q; ++q) {
            for (int s = 0; s <= S; ++s) {
                logs[q][s] = val(p_name(chance, k, q, s));
                plan.max_log_burden_error = std::max(
                    plan.max_log_burden_error, std::fabs(pd[q].values[s] - logs[q][s]));
            }
        }
        if (k == 0) plan.log_burden = logs;
        if (chance) plan.scenario_log_burden.push_back(std::move(logs));
    }

    plan.white_cells.resize(M + 1);
    for (int mm = 0; mm <= M; ++mm) plan.white_cells[mm] = scale * val(nw_name(mm));
    std::vector<std::vector<double>> day_conc(D, std::vector<double>(M + 1, 0.0));
    for (int d = 0; d < D; ++d)
        for (int mm = 0; mm <= M; ++mm)
            day_conc[d][mm] = pk[d].values[grid.day_start_step(mm)];
    trajectory wbc = simulate_wbc(p.wbc, p.drugs, day_conc, M);
    for (int mm = 0; mm <= M; ++mm)
        plan.max_white_cell_error =
            std::max(plan.max_white_cell_error, std::fabs(wbc.values[mm] - plan.white_cells[mm]));

    plan.neutrophils.resize(S + 1);
    plan.lymphocytes.resize(S + 1);
    for (int s = 0; s <= S; ++s) {
        plan.neutrophils[s] = scale * val(nneu_name(s));
        plan.lymphocytes[s] = scale * val(nlym_name(s));
    }

    plan.objective = objective_value(model.milp, solution);
    if (chance) {
        const auto& scen = model.options.scenarios->scenarios;
        for (int k = 0; k < n_traj; ++k) {
            bool sel = val(zsurg_name(k)) > 0.5;
            plan.scenario_selected.push_back(sel);
            if (sel) plan.covered_probability += scen[k].prob;
        }
    }
    return plan;
}

std::map<std::string, double> assignment_from_doses(
    const transcribed_model& model, const std::vector<std::vector<double>>& doses) {
    if (model.n_scenarios > 0)
        throw milp_error("assignment reconstruction covers deterministic models only");
    if (model.options.bilinear != bilinear_mode::mccormick)
        throw milp_error("assignment reconstruction needs McCormick mode: the discrete "
                         "ladder has no exact level for an arbitrary count");
    const auto& p = model.params;
    const auto& grid = p.grid;
    const int S = grid.n_steps();
    const int M = grid.horizon_days;
    const int D = static_cast<int>(p.drugs.size());
    const int Q = static_cast<int>(p.tumor.cell_types.size());
    const int tau = grid.wbc_lag_days;
    const double scale = model.options.wbc_scale;

    if (static_cast<int>(doses.size()) != D)
        throw milp_error("dose schedule covers " + std::to_string(doses.size()) + " drugs, model has " +
                         std::to_string(D));
    for (int d = 0; d < D; ++d) {
        if (static_cast<int>(doses[d].size()) != S + 1)
            throw milp_error("dose schedule of " + p.drugs[d].name + " needs " +
                             std::to_string(S + 1) + " entries");
        if (std::fabs(doses[d][S]) > 1e-12)
            throw milp_error("the final grid point cannot carry a dose");
    }

    std::map<std::string, double> out;
    std::vector<trajectory> pk(D);
    for (int d = 0; d < D; ++d) {
        const auto& drug = p.drugs[d];
        pk[d] = simulate_pk(drug, doses[d], grid);
        std::vector<double> eff = effective_concentration(drug, pk[d].values);
        for (int s = 0; s <= S; ++s) {
            out[u_name(d, s)] = doses[d][s];
            out[c_name(d, s)] = pk[d].values[s];
            out[e_name(d, s)] = eff[s];
            if (drug.beta_eff > 0.0 && s >= 1) out[ze_name(d, s)] = eff[s] > 0.0 ? 1.0 : 0.0;
        }
        if (drug.is_oral()) {
            const double pill = *drug.pill_mass;
            for (int s = 0; s < S; ++s) {
                if (!grid.is_meal_step(s)) {
                    if (std::fabs(doses[d][s]) > 1e-9)
                        throw milp_error(drug.name + " dosed outside a meal step");
                    continue;
                }
                const double count = doses[d][s] / pill;
                if (std::fabs(count - std::round(count)) > 1e-6)
                    throw milp_error("dose of " + drug.name + " at step " + std::to_string(s) +
                                     " is not a whole pill count");
                out[zpill_name(d, s)] = std::round(count);
            }
        }
        if (drug.rest_days) {
            const int spd = grid.steps_per_day();
            for (int mm = 0; mm < M; ++mm) {
                double day_total = 0.0;
                for (int s = mm * spd; s < (mm + 1) * spd; ++s) day_total += doses[d][s];
                out[zrest_name(d, mm)] = day_total > 1e-12 ? 0.0 : 1.0;
            }
        }
    }

    tumor_params tumor = p.tumor;
    for (int q = 0; q < Q; ++q) tumor.n0_by_type[q] = std::exp(model.initial_log_pops[q]);
    std::vector<trajectory> pd = simulate_pd(tumor, p.drugs, pk, grid);
    for (int q = 0; q < Q; ++q)
        for (int s = 0; s <= S; ++s) out[p_name(false, 0, q, s)] = pd[q].values[s];

    std::vector<std::vector<double>> day_conc(D, std::vector<double>(M + 1, 0.0));
    for (int d = 0; d < D; ++d)
        for (int mm = 0; mm <= M; ++mm)
            day_conc[d][mm] = pk[d].values[grid.day_start_step(mm)];
    trajectory wbc = simulate_wbc(p.wbc, p.drugs, day_conc, M);
    for (int mm = 0; mm <= M; ++mm) out[nw_name(mm)] = wbc.values[mm] / scale;
    for (int s = 0; s <= S; ++s) {
        const double nw = wbc.values[grid.day_of_step(s)] / scale;
        out[nneu_name(s)] = p.wbc.theta_neu * nw;
        out[nlym_name(s)] = p.wbc.theta_lym * nw;
    }
    for (int d = 0; d < D; ++d) {
        for (int mm = 0; mm < M; ++mm) {
            const double conc = mm >= tau ? day_conc[d][mm - tau] : 0.0;
            out[b_name(d, mm)] = (wbc.values[mm] / scale) * conc;
        }
    }
    return out;
}

void write_model_listing(const milp_model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw milp_error("cannot open " + path + " for writing");
    out << "model " << model.name << ": " << model.n_vars() << " variables, " << model.n_rows()
        << " rows, " << model.n_integer() << " integer (" << model.n_binary() << " binary)\n\n";
    out << "variables:\n";
    for (const auto& v : model.variables) {
        out << "  " << v.name;
        switch (v.kind) {
            case var_kind::continuous: break;
            case var_kind::integer: out << " [integer]"; break;
            case var_kind::binary: out << " [binary]"; break;
        }
        out << "  in [";
        if (v.lower <= -milp_inf)
            out << "-inf";
        else
            out << v.lower;
        out << ", ";
        if (v.upper >= milp_inf)
            out << "+inf";
        else
            out << v.upper;
        out << "]\n";
    }
    out << "\nminimize:\n ";
    for (const auto& t : model.objective)
        out << " " << (t.coef >= 0 ? "+" : "") << t.coef << " " << model.variables[t.col].name;
    out << "\n\nsubject to:\n";
    for (const auto& r : model.constraints) {
        out << "  " << r.name << ":";
        for (const auto& t : r.terms)
            out << " " << (t.coef >= 0 ? "+" : "") << t.coef << " " << model.variables[t.col].name;
        switch (r.sense) {
            case row_sense::le: out << " <= "; break;
            case row_sense::eq: out << " = "; break;
            case row_sense::ge: out << " >= "; break;
        }
        out << r.rhs << "\n";
    }
    if (!out) throw milp_error("failed writing " + path);
}

}  // namespace chemoplan
