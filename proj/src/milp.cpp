#include "chemoplan/milp.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace chemoplan {

int milp_model::add_var(const std::string& vname, var_kind kind, double lower, double upper) {
    if (var_index.count(vname)) throw milp_error("duplicate variable name: " + vname);
    if (kind == var_kind::binary) {
        lower = 0.0;
        upper = std::min(upper, 1.0);
    }
    if (lower > upper)
        throw milp_error("variable " + vname + ": lower bound exceeds upper bound");
    int col = n_vars();
    variables.push_back({vname, kind, lower, upper});
    var_index[vname] = col;
    return col;
}

void milp_model::add_row(const std::string& rname, std::vector<lin_term> terms, row_sense sense,
                         double rhs) {
    for (const auto& t : terms)
        if (t.col < 0 || t.col >= n_vars())
            throw milp_error("row " + rname + ": term references unknown column");
    constraints.push_back({rname, std::move(terms), sense, rhs});
}

void milp_model::add_objective_term(int col, double coef) {
    if (col < 0 || col >= n_vars()) throw milp_error("objective term references unknown column");
    objective.push_back({col, coef});
}

int milp_model::n_integer() const {
    int n = 0;
    for (const auto& v : variables)
        if (v.kind != var_kind::continuous) ++n;
    return n;
}

int milp_model::n_binary() const {
    int n = 0;
    for (const auto& v : variables)
        if (v.kind == var_kind::binary) ++n;
    return n;
}

void milp_model::check() const {
    std::set<std::string> names;
    for (const auto& v : variables) {
        if (!names.insert(v.name).second) throw milp_error("duplicate variable name: " + v.name);
        if (v.lower > v.upper) throw milp_error("variable " + v.name + ": lower > upper");
        if (v.kind == var_kind::binary && (v.lower < 0.0 || v.upper > 1.0))
            throw milp_error("binary variable " + v.name + " outside [0,1]");
        auto it = var_index.find(v.name);
        if (it == var_index.end() || variables[it->second].name != v.name)
            throw milp_error("variable index out of sync for " + v.name);
    }
    std::set<std::string> row_names;
    for (const auto& r : constraints) {
        if (!row_names.insert(r.name).second) throw milp_error("duplicate row name: " + r.name);
        if (names.count(r.name)) throw milp_error("row name collides with variable: " + r.name);
        for (const auto& t : r.terms)
            if (t.col < 0 || t.col >= n_vars())
                throw milp_error("row " + r.name + ": term references unknown column");
    }
    for (const auto& t : objective)
        if (t.col < 0 || t.col >= n_vars())
            throw milp_error("objective term references unknown column");
}

namespace {

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(std::numeric_limits<double>::max_digits10);
    ss << v;
    return ss.str();
}

}  // namespace

void write_mps(const milp_model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw milp_error("cannot write MPS file: " + path);
    out << "NAME " << model.name << "\n";
    out << "ROWS\n";
    out << " N OBJ\n";
    for (const auto& r : model.constraints) {
        char s = r.sense == row_sense::le ? 'L' : (r.sense == row_sense::ge ? 'G' : 'E');
        out << " " << s << " " << r.name << "\n";
    }

    // Collect per-column entries: objective first, then rows in order.
    std::vector<std::vector<std::pair<std::string, double>>> col_entries(model.n_vars());
    for (const auto& t : model.objective) col_entries[t.col].push_back({"OBJ", t.coef});
    for (const auto& r : model.constraints)
        for (const auto& t : r.terms) col_entries[t.col].push_back({r.name, t.coef});

    out << "COLUMNS\n";
    bool in_int = false;
    int marker = 0;
    for (int c = 0; c < model.n_vars(); ++c) {
        const auto& v = model.variables[c];
        const bool is_int = v.kind != var_kind::continuous;
        if (is_int != in_int) {
            out << "    MARKER" << marker++ << " 'MARKER' "
                << (is_int ? "'INTORG'" : "'INTEND'") << "\n";
            in_int = is_int;
        }
        const auto& entries = col_entries[c];
        if (entries.empty()) {
            // Column must still exist; emit a zero objective entry.
            out << "    " << v.name << " OBJ 0\n";
            continue;
        }
        for (size_t i = 0; i < entries.size(); i += 2) {
            out << "    " << v.name << " " << entries[i].first << " " << num(entries[i].second);
            if (i + 1 < entries.size())
                out << " " << entries[i + 1].first << " " << num(entries[i + 1].second);
            out << "\n";
        }
    }
    if (in_int) out << "    MARKER" << marker++ << " 'MARKER' 'INTEND'\n";

    out << "RHS\n";
    for (const auto& r : model.constraints)
        if (r.rhs != 0.0) out << "    RHS " << r.name << " " << num(r.rhs) << "\n";

    out << "BOUNDS\n";
    for (const auto& v : model.variables) {
        const bool lo_inf = v.lower <= -milp_inf;
        const bool up_inf = v.upper >= milp_inf;
        if (v.kind == var_kind::binary) {
            out << " BV BND " << v.name << "\n";
            continue;
        }
        if (v.kind == var_kind::integer) {
            // Explicit bounds on every integer column; MPS readers disagree
            // on the default integer upper bound.
            out << " LI BND " << v.name << " " << num(v.lower) << "\n";
            if (up_inf)
                out << " PL BND " << v.name << "\n";
            else
                out << " UI BND " << v.name << " " << num(v.upper) << "\n";
            continue;
        }
        if (lo_inf && up_inf) {
            out << " FR BND " << v.name << "\n";
        } else if (lo_inf) {
            out << " MI BND " << v.name << "\n";
            out << " UP BND " << v.name << " " << num(v.upper) << "\n";
        } else {
            if (v.lower != 0.0) out << " LO BND " << v.name << " " << num(v.lower) << "\n";
            if (!up_inf) out << " UP BND " << v.name << " " << num(v.upper) << "\n";
        }
    }
    out << "ENDATA\n";
    if (!out) throw milp_error("write failed: " + path);
}

milp_model parse_mps(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw milp_error("cannot open MPS file: " + path);
    milp_model m;
    enum class section { none, rows, columns, rhs, ranges, bounds, done };
    section sec = section::none;
    std::string obj_row;
    std::map<std::string, int> row_index;
    bool in_int = false;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw milp_error(path + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '*') continue;
        std::istringstream ss(line);
        std::vector<std::string> tok;
        std::string t;
        while (ss >> t) tok.push_back(t);
        if (tok.empty()) continue;
        const bool header = !std::isspace(static_cast<unsigned char>(line[0]));
        if (header) {
            if (tok[0] == "NAME") {
                if (tok.size() > 1) m.name = tok[1];
            } else if (tok[0] == "ROWS")
                sec = section::rows;
            else if (tok[0] == "COLUMNS")
                sec = section::columns;
            else if (tok[0] == "RHS")
                sec = section::rhs;
            else if (tok[0] == "RANGES")
                sec = section::ranges;
            else if (tok[0] == "BOUNDS")
                sec = section::bounds;
            else if (tok[0] == "ENDATA")
                sec = section::done;
            else
                fail("unknown section: " + tok[0]);
            continue;
        }
        switch (sec) {
            case section::rows: {
                if (tok.size() != 2) fail("ROWS lines need sense and name");
                if (tok[0] == "N") {
                    if (obj_row.empty()) obj_row = tok[1];
                } else {
                    row_sense s = tok[0] == "L"   ? row_sense::le
                                  : tok[0] == "G" ? row_sense::ge
                                  : tok[0] == "E" ? row_sense::eq
                                                  : (fail("bad row sense " + tok[0]),
                                                     row_sense::le);
                    row_index[tok[1]] = m.n_rows();
                    m.constraints.push_back({tok[1], {}, s, 0.0});
                }
                break;
            }
            case section::columns: {
                if (tok.size() >= 3 && tok[1] == "'MARKER'") {
                    in_int = tok[2] == "'INTORG'";
                    break;
                }
                if (tok.size() != 3 && tok.size() != 5) fail("bad COLUMNS line");
                const std::string& col = tok[0];
                if (!m.var_index.count(col))
                    m.add_var(col, in_int ? var_kind::integer : var_kind::continuous, 0.0,
                              milp_inf);
                int c = m.var_index.at(col);
                for (size_t i = 1; i + 1 < tok.size(); i += 2) {
                    double v = std::stod(tok[i + 1]);
                    if (tok[i] == obj_row) {
                        if (v != 0.0) m.add_objective_term(c, v);
                    } else {
                        auto it = row_index.find(tok[i]);
                        if (it == row_index.end()) fail("unknown row " + tok[i]);
                        m.constraints[it->second].terms.push_back({c, v});
                    }
                }
                break;
            }
            case section::rhs: {
                if (tok.size() != 3 && tok.size() != 5) fail("bad RHS line");
                for (size_t i = 1; i + 1 < tok.size(); i += 2) {
                    if (tok[i] == obj_row) continue;  // objective constant unsupported
                    auto it = row_index.find(tok[i]);
                    if (it == row_index.end()) fail("unknown row " + tok[i]);
                    m.constraints[it->second].rhs = std::stod(tok[i + 1]);
                }
                break;
            }
            case section::ranges: {
                fail("RANGES entries are not supported by this dialect");
                break;
            }
            case section::bounds: {
                if (tok.size() < 3) fail("bad BOUNDS line");
                const std::string& kind = tok[0];
                const std::string& col = tok[2];
                auto it = m.var_index.find(col);
                if (it == m.var_index.end()) fail("bounds for unknown column " + col);
                milp_var& v = m.variables[it->second];
                double val = tok.size() > 3 ? std::stod(tok[3]) : 0.0;
                if (kind == "LO" || kind == "LI")
                    v.lower = val;
                else if (kind == "UP" || kind == "UI")
                    v.upper = val;
                else if (kind == "FX")
                    v.lower = v.upper = val;
                else if (kind == "FR") {
                    v.lower = -milp_inf;
                    v.upper = milp_inf;
                } else if (kind == "MI")
                    v.lower = -milp_inf;
                else if (kind == "PL")
                    v.upper = milp_inf;
                else if (kind == "BV") {
                    v.kind = var_kind::binary;
                    v.lower = 0.0;
                    v.upper = 1.0;
                } else
                    fail("unsupported bound kind " + kind);
                break;
            }
            case section::none:
            case section::done:
                fail("data outside any section");
        }
    }
    if (obj_row.empty()) throw milp_error(path + ": no objective (N) row");
    // BV restores the binary kind, so kinds round-trip through write_mps;
    // foreign integer columns that merely have [0,1] bounds stay integer.
    m.check();
    return m;
}

std::vector<std::string> check_feasibility(const milp_model& model,
                                           const std::map<std::string, double>& assignment,
                                           double tol, double int_tol) {
    std::vector<std::string> bad;
    std::vector<double> x(model.n_vars());
    for (int c = 0; c < model.n_vars(); ++c) {
        auto it = assignment.find(model.variables[c].name);
        if (it == assignment.end()) {
            bad.push_back("missing value for variable " + model.variables[c].name);
            return bad;
        }
        x[c] = it->second;
    }
    for (int c = 0; c < model.n_vars(); ++c) {
        const auto& v = model.variables[c];
        if (x[c] < v.lower - tol)
            bad.push_back("variable " + v.name + " = " + std::to_string(x[c]) +
                          " below lower bound " + std::to_string(v.lower));
        if (x[c] > v.upper + tol)
            bad.push_back("variable " + v.name + " = " + std::to_string(x[c]) +
                          " above upper bound " + std::to_string(v.upper));
        if (v.kind != var_kind::continuous && std::abs(x[c] - std::round(x[c])) > int_tol)
            bad.push_back("variable " + v.name + " = " + std::to_string(x[c]) +
                          " violates integrality");
    }
    for (const auto& r : model.constraints) {
        double lhs = 0.0;
        for (const auto& t : r.terms) lhs += t.coef * x[t.col];
        bool ok = r.sense == row_sense::le   ? lhs <= r.rhs + tol
                  : r.sense == row_sense::ge ? lhs >= r.rhs - tol
                                             : std::abs(lhs - r.rhs) <= tol;
        if (!ok)
            bad.push_back("row " + r.name + ": lhs " + std::to_string(lhs) + " vs rhs " +
                          std::to_string(r.rhs));
    }
    return bad;
}

double objective_value(const milp_model& model, const std::map<std::string, double>& assignment) {
    double obj = 0.0;
    for (const auto& t : model.objective) {
        auto it = assignment.find(model.variables[t.col].name);
        if (it == assignment.end())
            throw milp_error("objective_value: missing variable " +
                             model.variables[t.col].name);
        obj += t.coef * it->second;
    }
    return obj;
}

}  // namespace chemoplan
