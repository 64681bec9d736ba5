#include "chemoplan/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace chemoplan {

std::string to_string(solve_status s) {
    switch (s) {
        case solve_status::optimal: return "optimal";
        case solve_status::infeasible: return "infeasible";
        case solve_status::unbounded: return "unbounded";
        case solve_status::limit: return "limit";
    }
    return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kPhase1Tol = 1e-7;
constexpr double kIntTol = 1e-6;
constexpr double kGapCutoff = 1e-9;

struct lp_outcome {
    enum class st { optimal, infeasible, unbounded, iter_limit };
    st status = st::infeasible;
    double objective = 0.0;
    std::vector<double> x;  // per model column
    long iterations = 0;
};

// Dense two-phase primal simplex over the standard form obtained by
// shifting/flipping/splitting bounded and free variables. Bland's rule
// (lowest eligible index enters; among minimum-ratio rows the one whose
// basic variable has the lowest index leaves) guarantees termination.
class dense_simplex {
  public:
    dense_simplex(const milp_model& m, const std::vector<double>& lb,
                  const std::vector<double>& ub)
        : model_(m), lb_(lb), ub_(ub) {}

    lp_outcome solve(long iter_cap) {
        lp_outcome out;
        for (int j = 0; j < model_.n_vars(); ++j)
            if (lb_[j] > ub_[j] + 1e-12) return out;  // empty box: infeasible
        build();
        if (!phase1(iter_cap, out)) return out;
        if (!phase2(iter_cap, out)) return out;
        extract(out);
        return out;
    }

  private:
    enum class map_kind { fixed, shifted, flipped, split };
    struct col_map {
        map_kind kind = map_kind::shifted;
        double base = 0.0;
        int col1 = -1, col2 = -1;
    };

    const milp_model& model_;
    std::vector<double> lb_, ub_;
    std::vector<col_map> maps_;
    int n_struct_ = 0, n_slack_ = 0, n_art_ = 0, n_total_ = 0;
    int m_rows_ = 0;
    std::vector<double> tab_;   // m_rows_ x (n_total_ + 1), last column is b
    std::vector<double> cost_;  // reduced-cost row, size n_total_
    double obj_ = 0.0;          // current objective of the active phase
    std::vector<int> basis_;
    std::vector<char> allowed_;
    std::vector<double> struct_cost_;

    double* row(int i) { return &tab_[static_cast<size_t>(i) * (n_total_ + 1)]; }
    double& rhs(int i) { return row(i)[n_total_]; }

    static bool neg_inf(double v) { return v <= -milp_inf; }
    static bool pos_inf(double v) { return v >= milp_inf; }

    void build() {
        const int n = model_.n_vars();
        maps_.resize(n);
        std::vector<std::pair<int, double>> ub_rows;  // structural col, cap
        for (int j = 0; j < n; ++j) {
            col_map& cm = maps_[j];
            if (lb_[j] == ub_[j]) {
                cm.kind = map_kind::fixed;
                cm.base = lb_[j];
            } else if (!neg_inf(lb_[j])) {
                cm.kind = map_kind::shifted;
                cm.base = lb_[j];
                cm.col1 = n_struct_++;
                if (!pos_inf(ub_[j])) ub_rows.push_back({cm.col1, ub_[j] - lb_[j]});
            } else if (!pos_inf(ub_[j])) {
                cm.kind = map_kind::flipped;
                cm.base = ub_[j];
                cm.col1 = n_struct_++;
            } else {
                cm.kind = map_kind::split;
                cm.col1 = n_struct_++;
                cm.col2 = n_struct_++;
            }
        }
        const int m_model = model_.n_rows();
        m_rows_ = m_model + static_cast<int>(ub_rows.size());

        // Senses after transformation; slack per non-equality row.
        std::vector<row_sense> sense(m_rows_, row_sense::le);
        for (int r = 0; r < m_model; ++r) sense[r] = model_.constraints[r].sense;
        n_slack_ = 0;
        std::vector<int> slack_col(m_rows_, -1);
        for (int r = 0; r < m_rows_; ++r)
            if (sense[r] != row_sense::eq) slack_col[r] = n_slack_++;

        n_art_ = m_rows_;  // upper bound; assigned below only where needed
        n_total_ = n_struct_ + n_slack_ + m_rows_;
        tab_.assign(static_cast<size_t>(m_rows_) * (n_total_ + 1), 0.0);

        for (int r = 0; r < m_model; ++r) {
            const auto& cr = model_.constraints[r];
            double* a = row(r);
            double b = cr.rhs;
            for (const auto& t : cr.terms) {
                const col_map& cm = maps_[t.col];
                switch (cm.kind) {
                    case map_kind::fixed: b -= t.coef * cm.base; break;
                    case map_kind::shifted:
                        a[cm.col1] += t.coef;
                        b -= t.coef * cm.base;
                        break;
                    case map_kind::flipped:
                        a[cm.col1] -= t.coef;
                        b -= t.coef * cm.base;
                        break;
                    case map_kind::split:
                        a[cm.col1] += t.coef;
                        a[cm.col2] -= t.coef;
                        break;
                }
            }
            rhs(r) = b;
        }
        for (size_t k = 0; k < ub_rows.size(); ++k) {
            int r = m_model + static_cast<int>(k);
            row(r)[ub_rows[k].first] = 1.0;
            rhs(r) = ub_rows[k].second;
        }

        for (int r = 0; r < m_rows_; ++r) {
            double* a = row(r);
            if (slack_col[r] >= 0)
                a[n_struct_ + slack_col[r]] = sense[r] == row_sense::le ? 1.0 : -1.0;
            if (rhs(r) < 0.0)
                for (int j = 0; j <= n_total_; ++j) a[j] = -a[j];
        }

        // Initial basis: a +1 slack where available, else a fresh artificial.
        basis_.assign(m_rows_, -1);
        allowed_.assign(n_total_, 1);
        for (int r = 0; r < m_rows_; ++r) {
            double* a = row(r);
            int sc = slack_col[r] >= 0 ? n_struct_ + slack_col[r] : -1;
            if (sc >= 0 && a[sc] == 1.0) {
                basis_[r] = sc;
            } else {
                int ac = n_struct_ + n_slack_ + r;
                a[ac] = 1.0;
                basis_[r] = ac;
            }
        }
        for (int j = n_struct_ + n_slack_; j < n_total_; ++j) {
            bool used = false;
            for (int r = 0; r < m_rows_; ++r) used = used || basis_[r] == j;
            if (!used) allowed_[j] = 0;
        }

        struct_cost_.assign(n_total_, 0.0);
        for (const auto& t : model_.objective) {
            const col_map& cm = maps_[t.col];
            switch (cm.kind) {
                case map_kind::fixed: break;
                case map_kind::shifted: struct_cost_[cm.col1] += t.coef; break;
                case map_kind::flipped: struct_cost_[cm.col1] -= t.coef; break;
                case map_kind::split:
                    struct_cost_[cm.col1] += t.coef;
                    struct_cost_[cm.col2] -= t.coef;
                    break;
            }
        }
    }

    void price_out(const std::vector<double>& c) {
        cost_.assign(n_total_, 0.0);
        obj_ = 0.0;
        for (int j = 0; j < n_total_; ++j) cost_[j] = j < static_cast<int>(c.size()) ? c[j] : 0.0;
        for (int r = 0; r < m_rows_; ++r) {
            double cb = basis_[r] < static_cast<int>(c.size()) ? c[basis_[r]] : 0.0;
            if (cb == 0.0) continue;
            const double* a = row(r);
            for (int j = 0; j < n_total_; ++j) cost_[j] -= cb * a[j];
            obj_ += cb * rhs(r);
        }
    }

    void pivot(int r, int q) {
        double* pr = row(r);
        const double inv = 1.0 / pr[q];
        for (int j = 0; j <= n_total_; ++j) pr[j] *= inv;
        pr[q] = 1.0;
        for (int i = 0; i < m_rows_; ++i) {
            if (i == r) continue;
            double* a = row(i);
            const double f = a[q];
            if (f == 0.0) continue;
            for (int j = 0; j <= n_total_; ++j) a[j] -= f * pr[j];
            a[q] = 0.0;
        }
        const double fc = cost_[q];
        if (fc != 0.0) {
            for (int j = 0; j < n_total_; ++j) cost_[j] -= fc * pr[j];
            cost_[q] = 0.0;
            obj_ += fc * pr[n_total_];
        }
        basis_[r] = q;
    }

    // Returns optimal=true when no entering column remains; fills leave/enter
    // otherwise. unbounded/iter_limit reported through the outcome.
    enum class step_result { optimal, stepped, unbounded, iter_limit };
    step_result step(long& iters, long iter_cap) {
        int q = -1;
        for (int j = 0; j < n_total_; ++j)
            if (allowed_[j] && cost_[j] < -kPivotTol) {
                q = j;
                break;
            }
        if (q < 0) return step_result::optimal;
        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m_rows_; ++i) {
            const double a = row(i)[q];
            if (a <= kPivotTol) continue;
            const double ratio = std::max(0.0, rhs(i)) / a;
            if (leave < 0 || ratio < best_ratio - 1e-12 ||
                (ratio <= best_ratio + 1e-12 && basis_[i] < basis_[leave])) {
                if (leave < 0 || ratio < best_ratio) best_ratio = ratio;
                leave = i;
            }
        }
        if (leave < 0) return step_result::unbounded;
        if (++iters > iter_cap) return step_result::iter_limit;
        pivot(leave, q);
        return step_result::stepped;
    }

    bool run(long& iters, long iter_cap, lp_outcome& out, bool phase_two) {
        while (true) {
            switch (step(iters, iter_cap)) {
                case step_result::optimal: return true;
                case step_result::stepped: break;
                case step_result::unbounded:
                    out.status = phase_two ? lp_outcome::st::unbounded
                                           : lp_outcome::st::infeasible;
                    return false;
                case step_result::iter_limit:
                    out.status = lp_outcome::st::iter_limit;
                    return false;
            }
        }
    }

    bool phase1(long iter_cap, lp_outcome& out) {
        bool any_art = false;
        for (int r = 0; r < m_rows_; ++r) any_art = any_art || basis_[r] >= n_struct_ + n_slack_;
        long iters = out.iterations;
        if (any_art) {
            std::vector<double> c(n_total_, 0.0);
            for (int j = n_struct_ + n_slack_; j < n_total_; ++j) c[j] = 1.0;
            price_out(c);
            if (!run(iters, iter_cap, out, false)) {
                out.iterations = iters;
                return false;
            }
            if (obj_ > kPhase1Tol) {
                out.status = lp_outcome::st::infeasible;
                out.iterations = iters;
                return false;
            }
            // Drive remaining artificials out of the basis; delete rows that
            // turn out to be linearly dependent.
            for (int r = 0; r < m_rows_;) {
                if (basis_[r] < n_struct_ + n_slack_) {
                    ++r;
                    continue;
                }
                int q = -1;
                for (int j = 0; j < n_struct_ + n_slack_; ++j)
                    if (std::abs(row(r)[j]) > kPivotTol) {
                        q = j;
                        break;
                    }
                if (q >= 0) {
                    pivot(r, q);
                    ++r;
                } else {
                    delete_row(r);
                }
            }
        }
        for (int j = n_struct_ + n_slack_; j < n_total_; ++j) allowed_[j] = 0;
        out.iterations = iters;
        return true;
    }

    void delete_row(int r) {
        if (r != m_rows_ - 1) {
            double* dst = row(r);
            double* src = row(m_rows_ - 1);
            std::copy(src, src + n_total_ + 1, dst);
            basis_[r] = basis_[m_rows_ - 1];
        }
        basis_.pop_back();
        --m_rows_;
        tab_.resize(static_cast<size_t>(m_rows_) * (n_total_ + 1));
    }

    bool phase2(long iter_cap, lp_outcome& out) {
        price_out(struct_cost_);
        long iters = out.iterations;
        bool ok = run(iters, iter_cap, out, true);
        out.iterations = iters;
        return ok;
    }

    void extract(lp_outcome& out) {
        std::vector<double> xt(n_total_, 0.0);
        for (int r = 0; r < m_rows_; ++r) xt[basis_[r]] = rhs(r);
        out.x.assign(model_.n_vars(), 0.0);
        for (int j = 0; j < model_.n_vars(); ++j) {
            const col_map& cm = maps_[j];
            switch (cm.kind) {
                case map_kind::fixed: out.x[j] = cm.base; break;
                case map_kind::shifted: out.x[j] = cm.base + xt[cm.col1]; break;
                case map_kind::flipped: out.x[j] = cm.base - xt[cm.col1]; break;
                case map_kind::split: out.x[j] = xt[cm.col1] - xt[cm.col2]; break;
            }
        }
        out.objective = 0.0;
        for (const auto& t : model_.objective) out.objective += t.coef * out.x[t.col];
        out.status = lp_outcome::st::optimal;
    }
};

lp_outcome solve_lp(const milp_model& m, const std::vector<double>& lb,
                    const std::vector<double>& ub, long iter_cap) {
    dense_simplex s(m, lb, ub);
    return s.solve(iter_cap);
}

std::vector<int> integer_columns(const milp_model& m) {
    std::vector<int> cols;
    for (int j = 0; j < m.n_vars(); ++j)
        if (m.variables[j].kind != var_kind::continuous) cols.push_back(j);
    return cols;
}

void guard_size(const milp_model& m, const builtin_limits& limits, const char* who) {
    if (m.n_vars() > limits.max_variables)
        throw solver_error(std::string(who) + ": size guard exceeded (" +
                           std::to_string(m.n_vars()) + " > " +
                           std::to_string(limits.max_variables) + " variables)");
    if (m.n_integer() > limits.max_integers)
        throw solver_error(std::string(who) + ": size guard exceeded (" +
                           std::to_string(m.n_integer()) + " > " +
                           std::to_string(limits.max_integers) + " integer variables)");
}

std::map<std::string, double> to_assignment(const milp_model& m, const std::vector<double>& x) {
    std::map<std::string, double> a;
    for (int j = 0; j < m.n_vars(); ++j) a[m.variables[j].name] = x[j];
    return a;
}

struct mip_search {
    const milp_model& model;
    const builtin_limits& limits;
    std::vector<int> int_cols;
    long nodes = 0;
    long iters_left = 0;
    bool hit_limit = false;
    bool root_unbounded = false;
    bool have_best = false;
    double best_obj = 0.0;
    std::vector<double> best_x;

    explicit mip_search(const milp_model& m, const builtin_limits& l)
        : model(m), limits(l), int_cols(integer_columns(m)),
          iters_left(l.max_simplex_iterations) {}

    lp_outcome lp(const std::vector<double>& lb, const std::vector<double>& ub) {
        lp_outcome r = solve_lp(model, lb, ub, iters_left);
        iters_left -= r.iterations;
        if (r.status == lp_outcome::st::iter_limit || iters_left <= 0) hit_limit = true;
        return r;
    }

    // Re-solve with every integer variable fixed to its rounded relaxation
    // value; the resulting clean vertex is the incumbent. Matches the
    // numerics of the enumeration oracle's leaf LPs.
    void try_incumbent(const std::vector<double>& x, std::vector<double> lb,
                       std::vector<double> ub, double relax_obj) {
        for (int c : int_cols) lb[c] = ub[c] = std::round(x[c]);
        lp_outcome fixed = lp(lb, ub);
        if (fixed.status == lp_outcome::st::optimal) {
            if (!have_best || fixed.objective < best_obj) {
                have_best = true;
                best_obj = fixed.objective;
                best_x = fixed.x;
            }
        } else if (!have_best || relax_obj < best_obj) {
            // Numerically defensive fallback: keep the integral relaxation
            // point itself.
            have_best = true;
            best_obj = relax_obj;
            best_x = x;
        }
    }

    void branch(std::vector<double> lb, std::vector<double> ub, int depth) {
        if (hit_limit) return;
        if (++nodes > limits.max_nodes) {
            hit_limit = true;
            return;
        }
        lp_outcome r = lp(lb, ub);
        if (r.status == lp_outcome::st::iter_limit) return;
        if (r.status == lp_outcome::st::infeasible) return;
        if (r.status == lp_outcome::st::unbounded) {
            if (depth == 0) root_unbounded = true;
            hit_limit = hit_limit || depth > 0;
            return;
        }
        if (have_best && r.objective >= best_obj - kGapCutoff) return;
        int frac_col = -1;
        double frac_score = kIntTol;
        for (int c : int_cols) {
            double f = r.x[c] - std::floor(r.x[c]);
            double score = std::min(f, 1.0 - f);
            if (score > frac_score) {
                frac_score = score;
                frac_col = c;
            }
        }
        if (frac_col < 0) {
            try_incumbent(r.x, lb, ub, r.objective);
            return;
        }
        const double v = r.x[frac_col];
        const double f = v - std::floor(v);
        auto down = [&] {
            std::vector<double> u2 = ub;
            u2[frac_col] = std::floor(v);
            branch(lb, u2, depth + 1);
        };
        auto up = [&] {
            std::vector<double> l2 = lb;
            l2[frac_col] = std::ceil(v);
            branch(l2, ub, depth + 1);
        };
        if (f >= 0.5) {
            up();
            down();
        } else {
            down();
            up();
        }
    }
};

std::pair<std::vector<double>, std::vector<double>> model_bounds(const milp_model& m) {
    std::vector<double> lb(m.n_vars()), ub(m.n_vars());
    for (int j = 0; j < m.n_vars(); ++j) {
        lb[j] = m.variables[j].lower;
        ub[j] = m.variables[j].upper;
    }
    return {lb, ub};
}

void finish_result(const milp_model& m, solve_result& res) {
    if (res.status == solve_status::optimal && res.has_assignment())
        res.violations = check_feasibility(m, res.assignment);
}

}  // namespace

solve_result solve_builtin(const milp_model& model, const builtin_limits& limits) {
    model.check();
    guard_size(model, limits, "solve_builtin");
    auto t0 = std::chrono::steady_clock::now();
    auto [lb, ub] = model_bounds(model);
    mip_search search(model, limits);
    search.branch(lb, ub, 0);
    solve_result res;
    if (search.root_unbounded && !search.have_best)
        res.status = solve_status::unbounded;
    else if (search.hit_limit)
        res.status = solve_status::limit;
    else if (!search.have_best)
        res.status = solve_status::infeasible;
    else
        res.status = solve_status::optimal;
    if (search.have_best) {
        res.objective = search.best_obj;
        // Integer components are exact after the fixed re-solve; snap off
        // residual representation noise anyway.
        for (int c : search.int_cols) search.best_x[c] = std::round(search.best_x[c]);
        res.assignment = to_assignment(model, search.best_x);
    }
    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    finish_result(model, res);
    return res;
}

namespace {

struct enum_search {
    const milp_model& model;
    const builtin_limits& limits;
    std::vector<int> int_cols;
    long lp_count = 0;
    bool hit_limit = false;
    bool have_best = false;
    double best_obj = 0.0;
    std::vector<double> best_x;

    enum_search(const milp_model& m, const builtin_limits& l)
        : model(m), limits(l), int_cols(integer_columns(m)) {}

    void recurse(std::vector<double>& lb, std::vector<double>& ub, size_t depth) {
        if (hit_limit) return;
        if (++lp_count > limits.max_nodes) {
            hit_limit = true;
            return;
        }
        lp_outcome r = solve_lp(model, lb, ub, limits.max_simplex_iterations);
        if (r.status == lp_outcome::st::iter_limit) {
            hit_limit = true;
            return;
        }
        if (r.status != lp_outcome::st::optimal && r.status != lp_outcome::st::unbounded)
            return;  // infeasible prefix: no completion can be feasible
        if (depth == int_cols.size()) {
            if (r.status != lp_outcome::st::optimal) return;
            if (!have_best || r.objective < best_obj) {
                have_best = true;
                best_obj = r.objective;
                best_x = r.x;
            }
            return;
        }
        const int c = int_cols[depth];
        const double save_l = lb[c], save_u = ub[c];
        const long lo = static_cast<long>(std::ceil(save_l - 1e-9));
        const long hi = static_cast<long>(std::floor(save_u + 1e-9));
        for (long v = lo; v <= hi && !hit_limit; ++v) {
            lb[c] = ub[c] = static_cast<double>(v);
            recurse(lb, ub, depth + 1);
        }
        lb[c] = save_l;
        ub[c] = save_u;
    }
};

}  // namespace

solve_result enumerate_exact(const milp_model& model, const builtin_limits& limits) {
    model.check();
    guard_size(model, limits, "enumerate_exact");
    for (int c : integer_columns(model)) {
        const auto& v = model.variables[c];
        if (v.lower <= -milp_inf || v.upper >= milp_inf)
            throw solver_error("enumerate_exact: integer variable " + v.name +
                               " needs finite bounds");
    }
    auto t0 = std::chrono::steady_clock::now();
    auto [lb, ub] = model_bounds(model);
    enum_search search(model, limits);
    search.recurse(lb, ub, 0);
    solve_result res;
    if (search.hit_limit)
        res.status = solve_status::limit;
    else if (!search.have_best)
        res.status = solve_status::infeasible;
    else
        res.status = solve_status::optimal;
    if (search.have_best) {
        res.objective = search.best_obj;
        for (int c : search.int_cols) search.best_x[c] = std::round(search.best_x[c]);
        res.assignment = to_assignment(model, search.best_x);
    }
    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    finish_result(model, res);
    return res;
}

namespace {

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    size_t pos = 0;
    while ((pos = tmpl.find(key, pos)) != std::string::npos) {
        tmpl.replace(pos, key.size(), value);
        pos += value.size();
    }
    return tmpl;
}

}  // namespace

void write_solution(const solve_result& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw solver_error("cannot write solution file: " + path);
    out << "=status= " << to_string(result.status) << "\n";
    out.precision(std::numeric_limits<double>::max_digits10);
    if (result.status == solve_status::optimal || result.has_assignment())
        out << "=obj= " << result.objective << "\n";
    if (result.gap > 0.0) out << "=gap= " << result.gap << "\n";
    for (const auto& [name, value] : result.assignment) out << name << " " << value << "\n";
    if (!out) throw solver_error("write failed: " + path);
}

solve_result parse_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw solver_error("cannot open solution file: " + path);
    solve_result res;
    bool saw_status = false, saw_obj = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        if (key == "=status=") {
            std::string st;
            ss >> st;
            if (st == "optimal")
                res.status = solve_status::optimal;
            else if (st == "infeasible")
                res.status = solve_status::infeasible;
            else if (st == "unbounded")
                res.status = solve_status::unbounded;
            else if (st == "limit")
                res.status = solve_status::limit;
            else
                throw solver_error(path + ":" + std::to_string(line_no) + ": bad status " + st);
            saw_status = true;
        } else if (key == "=obj=") {
            ss >> res.objective;
            saw_obj = true;
        } else if (key == "=gap=") {
            ss >> res.gap;
        } else {
            double v;
            if (!(ss >> v))
                throw solver_error(path + ":" + std::to_string(line_no) +
                                   ": expected `name value`");
            res.assignment[key] = v;
        }
    }
    if (!saw_status) {
        if (res.has_assignment())
            res.status = solve_status::optimal;
        else
            throw solver_error(path + ": no status line and no assignment");
    }
    if (res.status == solve_status::optimal && !saw_obj && res.assignment.empty())
        throw solver_error(path + ": optimal status without objective or assignment");
    return res;
}

solve_result solve_external(const milp_model& model, const std::string& command_template,
                            double time_limit_seconds) {
    model.check();
    if (command_template.find("{mps}") == std::string::npos ||
        command_template.find("{sol}") == std::string::npos)
        throw solver_error("solver command template must contain {mps} and {sol}");
    namespace fs = std::filesystem;
    std::string dir_tmpl = (fs::temp_directory_path() / "chemoplan.XXXXXX").string();
    std::vector<char> dir_buf(dir_tmpl.begin(), dir_tmpl.end());
    dir_buf.push_back('\0');
    if (!mkdtemp(dir_buf.data())) throw solver_error("cannot create temp directory");
    const fs::path dir(dir_buf.data());
    const std::string mps = (dir / "model.mps").string();
    const std::string sol = (dir / "model.sol").string();
    write_mps(model, mps);

    std::string cmd = command_template;
    cmd = substitute(cmd, "{mps}", mps);
    cmd = substitute(cmd, "{sol}", sol);
    {
        std::ostringstream tl;
        tl.precision(10);
        tl << time_limit_seconds;
        cmd = substitute(cmd, "{time_limit}", tl.str());
    }
    cmd += " 2>&1";

    auto t0 = std::chrono::steady_clock::now();
    std::string output;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        fs::remove_all(dir);
        throw solver_error("cannot launch solver subprocess: " + cmd);
    }
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
    const int rc = pclose(pipe);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    solve_result res;
    if (fs::exists(sol)) {
        try {
            res = parse_solution(sol);
        } catch (const solver_error& e) {
            fs::remove_all(dir);
            throw solver_error(std::string(e.what()) + "\nsolver output:\n" + output);
        }
    } else {
        fs::remove_all(dir);
        throw solver_error("solver produced no solution file (exit code " + std::to_string(rc) +
                           ")\ncommand: " + cmd + "\noutput:\n" + output);
    }
    fs::remove_all(dir);
    if (rc != 0 && res.status == solve_status::optimal)
        throw solver_error("solver exited with code " + std::to_string(rc) +
                           " but claimed optimality\noutput:\n" + output);
    res.runtime_seconds = elapsed;
    res.log = output;
    if (res.has_assignment() &&
        (res.status == solve_status::optimal || res.status == solve_status::limit))
        res.violations = check_feasibility(model, res.assignment);
    return res;
}

std::string default_solver_command(const std::string& exe_dir) {
    if (const char* env = std::getenv("CHEMOPLAN_SOLVER_CMD"); env && *env) return env;
    namespace fs = std::filesystem;
    const std::string rel = "tools/adapters/scipy_milp_solve.py";
    for (const auto& base : {exe_dir + "/..", exe_dir + "/../..", std::string("."),
                             std::string("..")}) {
        fs::path cand = fs::path(base) / rel;
        std::error_code ec;
        if (fs::exists(cand, ec))
            return "python3 " + fs::weakly_canonical(cand).string() +
                   " {mps} {sol} --time-limit {time_limit} --mip-rel-gap 0.01";
    }
    return "";
}

}  // namespace chemoplan
