#include "chemoplan/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace chemoplan {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// One parsed parameter file: section -> key -> (value string, line number).
struct ini_data {
    struct entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };
    std::string path;
    std::map<std::string, std::map<std::string, entry>> sections;
    std::vector<std::string> section_order;

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw param_error(path + ":" + std::to_string(line) + ": " + msg);
    }
};

ini_data parse_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw param_error("cannot open parameter file: " + path);
    ini_data data;
    data.path = path;
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') data.fail(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) data.fail(line_no, "empty section name");
            if (!data.sections.count(section)) data.section_order.push_back(section);
            data.sections[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) data.fail(line_no, "expected key = value");
        if (section.empty()) data.fail(line_no, "key outside any [section]");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) data.fail(line_no, "empty key");
        if (data.sections[section].count(key)) data.fail(line_no, "duplicate key '" + key + "'");
        data.sections[section][key] = {value, line_no, false};
    }
    return data;
}

// Typed accessors over one section.
class section_view {
  public:
    section_view(const ini_data& data, const std::string& name)
        : data_(data), name_(name), entries_(&data.sections.at(name)) {}

    const ini_data::entry& raw(const std::string& key) const {
        auto it = entries_->find(key);
        if (it == entries_->end())
            throw param_error(data_.path + ": [" + name_ + "] missing key '" + key + "'");
        it->second.used = true;
        return it->second;
    }
    bool has(const std::string& key) const { return entries_->count(key) != 0; }

    std::string str(const std::string& key) const { return raw(key).value; }

    double num(const std::string& key) const {
        const auto& e = raw(key);
        char* end = nullptr;
        double v = std::strtod(e.value.c_str(), &end);
        if (end == e.value.c_str() || *end != '\0')
            data_.fail(e.line, "key '" + key + "': not a number: '" + e.value + "'");
        return v;
    }
    int integer(const std::string& key) const {
        double v = num(key);
        if (v != std::floor(v)) {
            data_.fail(raw(key).line, "key '" + key + "': expected an integer");
        }
        return static_cast<int>(v);
    }
    std::vector<double> num_list(const std::string& key) const {
        const auto& e = raw(key);
        std::istringstream ss(e.value);
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) {
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0')
                data_.fail(e.line, "key '" + key + "': not a number: '" + tok + "'");
            out.push_back(v);
        }
        if (out.empty()) data_.fail(e.line, "key '" + key + "': empty list");
        return out;
    }
    std::vector<std::string> str_list(const std::string& key) const {
        std::istringstream ss(raw(key).value);
        std::vector<std::string> out;
        std::string tok;
        while (ss >> tok) out.push_back(tok);
        return out;
    }

  private:
    const ini_data& data_;
    std::string name_;
    const std::map<std::string, ini_data::entry>* entries_;
};

[[noreturn]] void invariant_fail(const std::string& where, const std::string& what) {
    throw param_error("invariant violation in " + where + ": " + what);
}

void require(bool ok, const std::string& where, const std::string& what) {
    if (!ok) invariant_fail(where, what);
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(std::numeric_limits<double>::max_digits10);
    ss << v;
    return ss.str();
}

}  // namespace

std::string to_string(route r) {
    return r == route::oral ? "oral" : "intravenous";
}

double wbc_params::beta_w() const {
    return std::min(beta_neu / theta_neu, beta_lym / theta_lym);
}

std::vector<int> time_grid::meal_steps_in_day() const {
    std::vector<int> out;
    const int spd = steps_per_day();
    for (double hour : meal_offsets) {
        // Snap off-grid meal hours to the nearest step; ties resolve earlier.
        int s = static_cast<int>(std::floor(hour / step_hours + 0.5));
        if (hour / step_hours + 0.5 == std::floor(hour / step_hours + 0.5)) --s;
        s = std::clamp(s, 0, spd - 1);
        if (out.empty() || out.back() != s) out.push_back(s);
    }
    return out;
}

std::vector<int> time_grid::meal_steps() const {
    std::vector<int> out;
    const int spd = steps_per_day();
    const auto in_day = meal_steps_in_day();
    for (int day = 0; day < horizon_days; ++day)
        for (int off : in_day) out.push_back(day * spd + off);
    return out;
}

bool time_grid::is_meal_step(int s) const {
    if (day_of_step(s) >= horizon_days) return false;
    const auto in_day = meal_steps_in_day();
    const int off = s % steps_per_day();
    return std::find(in_day.begin(), in_day.end(), off) != in_day.end();
}

const drug_params& model_params::drug_by_name(const std::string& name) const {
    for (const auto& d : drugs)
        if (d.name == name) return d;
    throw param_error("unknown drug: " + name);
}

void validate(const model_params& p) {
    const size_t n_types = p.tumor.cell_types.size();
    require(!p.drugs.empty(), "drugs", "at least one drug required");
    for (const auto& d : p.drugs) {
        const std::string where = "drug " + d.name;
        require(d.xi > 0.0, where, "xi must be > 0");
        require(d.eta0 >= 0.0 && d.eta_wbc >= 0.0, where, "eta values must be >= 0");
        for (double e : d.eta_by_type) require(e >= 0.0, where, "eta values must be >= 0");
        require(d.eta_by_type.size() == n_types, where, "eta_by_type size must match cell types");
        require(d.rho >= 0.0, where, "rho must be >= 0");
        require(d.beta_eff >= 0.0, where, "beta_eff must be >= 0");
        require(d.beta_conc > 0.0, where, "beta_conc must be > 0");
        require(d.beta_cum > 0.0, where, "beta_cum must be > 0");
        require(d.beta_rate > 0.0, where, "beta_rate must be > 0");
        require(d.is_oral() == d.pill_mass.has_value(), where,
                "pill_mass present iff route is oral");
        if (d.pill_mass) require(*d.pill_mass > 0.0, where, "pill_mass must be > 0");
        if (d.rest_days) {
            require(!d.is_oral(), where, "rest_days applies to intravenous drugs");
            require(*d.rest_days >= 1, where, "rest_days must be >= 1");
        }
    }
    require(n_types >= 1, "tumor", "at least one cell type required");
    require(p.tumor.n0_by_type.size() == n_types && p.tumor.n_inf_by_type.size() == n_types,
            "tumor", "population lists must match cell type count");
    for (size_t q = 0; q < n_types; ++q) {
        require(p.tumor.n0_by_type[q] > 0.0, "tumor", "n0 must be > 0");
        require(p.tumor.n_inf_by_type[q] > p.tumor.n0_by_type[q], "tumor", "n_inf must exceed n0");
        int rt = p.tumor.cell_types[q].resistant_to;
        require(rt >= -1 && rt < static_cast<int>(p.drugs.size()), "tumor",
                "resistant_to must name a drug id or -1");
    }
    require(p.tumor.lambda > 0.0, "tumor", "lambda must be > 0");

    const auto& w = p.wbc;
    require(w.n_w0 > 0.0, "wbc", "n_w0 must be > 0");
    require(w.turnover > 0.0, "wbc", "turnover must be > 0");
    require(std::abs(w.production - w.turnover * w.n_w0) <= 1e-9 * w.production, "wbc",
            "production must equal turnover * n_w0 (drug-free steady state)");
    require(w.theta_neu > 0.0 && w.theta_lym > 0.0 && w.theta_neu + w.theta_lym <= 1.0, "wbc",
            "theta fractions must be positive and sum to at most 1");
    require(w.beta_neu > 0.0 && w.beta_lym > 0.0, "wbc", "toxicity thresholds must be > 0");
    require(w.beta_w() < w.n_w0, "wbc", "beta_w must lie below n_w0");
    require(w.delay_days >= 0, "wbc", "delay_days must be >= 0");

    const auto& g = p.grid;
    require(g.horizon_days >= 1, "grid", "horizon_days must be >= 1");
    require(g.step_hours > 0.0, "grid", "step_hours must be > 0");
    double spd = 24.0 / g.step_hours;
    require(std::abs(spd - std::round(spd)) < 1e-9, "grid",
            "step_hours must divide 24 (whole steps per day)");
    require(g.compartment_volume > 0.0, "grid", "compartment_volume must be > 0");
    require(g.body_surface > 0.0, "grid", "body_surface must be > 0");
    for (size_t i = 0; i < g.meal_offsets.size(); ++i) {
        require(g.meal_offsets[i] >= 0.0 && g.meal_offsets[i] < 24.0, "grid",
                "meal offsets must lie in [0,24)");
        if (i > 0)
            require(g.meal_offsets[i] > g.meal_offsets[i - 1], "grid",
                    "meal offsets must be strictly increasing");
    }

    for (const auto& [name, r] : p.regimens) {
        const std::string where = "regimen " + name;
        p.drug_by_name(r.drug);
        require(r.dose_per_admin > 0.0, where, "dose_per_admin must be > 0");
        require(r.days_on >= 1 && r.days_rest >= 0 && r.cycles >= 1, where,
                "cycle structure must be positive");
        require(!r.admin_hours.empty(), where, "admin_hours must be nonempty");
        for (double h : r.admin_hours)
            require(h >= 0.0 && h < 24.0, where, "admin hours must lie in [0,24)");
        require(r.prr > 0.0 && r.prr < 1.0, where, "prr must lie in (0,1)");
    }
}

model_params load_params(const std::string& path) {
    ini_data data = parse_ini(path);
    model_params p;

    if (!data.sections.count("grid")) throw param_error(path + ": missing [grid] section");
    {
        section_view s(data, "grid");
        p.grid.horizon_days = s.integer("horizon_days");
        p.grid.step_hours = s.num("step_hours");
        p.grid.meal_offsets = s.num_list("meal_hours");
        p.grid.compartment_volume = s.num("compartment_volume_m3");
        p.grid.body_surface = s.num("body_surface_m2");
    }

    if (!data.sections.count("tumor")) throw param_error(path + ": missing [tumor] section");
    {
        section_view s(data, "tumor");
        auto type_names = s.str_list("cell_types");
        p.tumor.n0_by_type = s.num_list("n0_cells");
        p.tumor.n_inf_by_type = s.num_list("n_inf_cells");
        p.tumor.lambda = s.num("lambda_per_day");
        for (const auto& t : type_names) p.tumor.cell_types.push_back({t, -1});
    }

    if (!data.sections.count("wbc")) throw param_error(path + ": missing [wbc] section");
    {
        section_view s(data, "wbc");
        p.wbc.n_w0 = s.num("n_w0_cells_per_m3");
        p.wbc.production = s.num("production_cells_per_m3_day");
        p.wbc.turnover = s.num("turnover_per_day");
        p.wbc.delay_days = s.integer("delay_days");
        p.wbc.theta_neu = s.num("theta_neu");
        p.wbc.theta_lym = s.num("theta_lym");
        p.wbc.beta_neu = s.num("beta_neu_cells_per_m3");
        p.wbc.beta_lym = s.num("beta_lym_cells_per_m3");
        p.grid.wbc_lag_days = p.wbc.delay_days;
    }

    // Drug sections in file order define drug ids.
    for (const auto& name : data.section_order) {
        if (name.rfind("drug.", 0) != 0) continue;
        section_view s(data, name);
        drug_params d;
        d.id = static_cast<int>(p.drugs.size());
        d.name = name.substr(5);
        std::string rt = s.str("route");
        if (rt == "oral")
            d.admin_route = route::oral;
        else if (rt == "intravenous")
            d.admin_route = route::intravenous;
        else
            throw param_error(path + ": [" + name + "] route must be oral or intravenous");
        d.xi = s.num("xi_per_day");
        d.eta0 = s.num("eta0_m3_per_g_day");
        d.eta_wbc = s.num("eta_wbc_m3_per_g_day");
        d.rho = s.num("rho_per_day");
        d.beta_eff = s.num("beta_eff_g_per_m3");
        d.beta_conc = s.num("beta_conc_g");
        d.beta_rate = s.num(d.admin_route == route::oral ? "beta_rate_g_per_m2_admin"
                                                         : "beta_rate_g_per_m2_hour");
        d.beta_cum = s.num("beta_cum_g_per_m2_day");
        if (s.has("pill_g")) d.pill_mass = s.num("pill_g");
        if (s.has("rest_days")) d.rest_days = s.integer("rest_days");
        p.drugs.push_back(d);
    }

    // Resolve per-type resistance and kill effects. A cell type named after a
    // drug resists that drug and sees a quarter of its kill effect.
    for (auto& t : p.tumor.cell_types) {
        t.resistant_to = -1;
        for (const auto& d : p.drugs)
            if (d.name == t.name) t.resistant_to = d.id;
    }
    for (auto& d : p.drugs) {
        d.eta_by_type.clear();
        for (const auto& t : p.tumor.cell_types)
            d.eta_by_type.push_back(t.resistant_to == d.id ? 0.25 * d.eta0 : d.eta0);
    }

    for (const auto& name : data.section_order) {
        if (name.rfind("regimen.", 0) != 0) continue;
        section_view s(data, name);
        regimen_spec r;
        r.drug = s.str("drug");
        r.dose_per_admin = s.num("dose_g_per_m2");
        r.admin_hours = s.num_list("admin_hours");
        r.days_on = s.integer("days_on");
        r.days_rest = s.integer("days_rest");
        r.cycles = s.integer("cycles");
        r.prr = s.num("prr");
        p.regimens[name.substr(8)] = r;
    }

    validate(p);
    return p;
}

void save_params(const model_params& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw param_error("cannot write parameter file: " + path);
    out << "# Combination-chemotherapy planning parameters.\n";
    out << "# Units are encoded in the key names.\n\n";
    out << "[grid]\n";
    out << "horizon_days = " << p.grid.horizon_days << "\n";
    out << "step_hours = " << fmt(p.grid.step_hours) << "\n";
    out << "meal_hours =";
    for (double m : p.grid.meal_offsets) out << " " << fmt(m);
    out << "\n";
    out << "compartment_volume_m3 = " << fmt(p.grid.compartment_volume) << "\n";
    out << "body_surface_m2 = " << fmt(p.grid.body_surface) << "\n\n";

    out << "[tumor]\n";
    out << "cell_types =";
    for (const auto& t : p.tumor.cell_types) out << " " << t.name;
    out << "\n";
    out << "n0_cells =";
    for (double v : p.tumor.n0_by_type) out << " " << fmt(v);
    out << "\n";
    out << "n_inf_cells =";
    for (double v : p.tumor.n_inf_by_type) out << " " << fmt(v);
    out << "\n";
    out << "lambda_per_day = " << fmt(p.tumor.lambda) << "\n\n";

    out << "[wbc]\n";
    out << "n_w0_cells_per_m3 = " << fmt(p.wbc.n_w0) << "\n";
    out << "production_cells_per_m3_day = " << fmt(p.wbc.production) << "\n";
    out << "turnover_per_day = " << fmt(p.wbc.turnover) << "\n";
    out << "delay_days = " << p.wbc.delay_days << "\n";
    out << "theta_neu = " << fmt(p.wbc.theta_neu) << "\n";
    out << "theta_lym = " << fmt(p.wbc.theta_lym) << "\n";
    out << "beta_neu_cells_per_m3 = " << fmt(p.wbc.beta_neu) << "\n";
    out << "beta_lym_cells_per_m3 = " << fmt(p.wbc.beta_lym) << "\n";

    for (const auto& d : p.drugs) {
        out << "\n[drug." << d.name << "]\n";
        out << "route = " << to_string(d.admin_route) << "\n";
        out << "xi_per_day = " << fmt(d.xi) << "\n";
        out << "eta0_m3_per_g_day = " << fmt(d.eta0) << "\n";
        out << "eta_wbc_m3_per_g_day = " << fmt(d.eta_wbc) << "\n";
        out << "rho_per_day = " << fmt(d.rho) << "\n";
        out << "beta_eff_g_per_m3 = " << fmt(d.beta_eff) << "\n";
        out << "beta_conc_g = " << fmt(d.beta_conc) << "\n";
        out << (d.is_oral() ? "beta_rate_g_per_m2_admin = " : "beta_rate_g_per_m2_hour = ")
            << fmt(d.beta_rate) << "\n";
        out << "beta_cum_g_per_m2_day = " << fmt(d.beta_cum) << "\n";
        if (d.pill_mass) out << "pill_g = " << fmt(*d.pill_mass) << "\n";
        if (d.rest_days) out << "rest_days = " << *d.rest_days << "\n";
    }

    for (const auto& [name, r] : p.regimens) {
        out << "\n[regimen." << name << "]\n";
        out << "drug = " << r.drug << "\n";
        out << "dose_g_per_m2 = " << fmt(r.dose_per_admin) << "\n";
        out << "admin_hours =";
        for (double h : r.admin_hours) out << " " << fmt(h);
        out << "\n";
        out << "days_on = " << r.days_on << "\n";
        out << "days_rest = " << r.days_rest << "\n";
        out << "cycles = " << r.cycles << "\n";
        out << "prr = " << fmt(r.prr) << "\n";
    }
    if (!out) throw param_error("write failed: " + path);
}

double cells_to_diameter(double cells) {
    if (cells <= 0.0) throw param_error("cells_to_diameter: cell count must be positive");
    return 25.0 * std::cbrt(cells / 1e9);
}

scenario_set load_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw param_error("cannot open scenario file: " + path);
    scenario_set set;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) cells.push_back(trim(tok));
        if (line_no == 1 || set.type_names.empty()) {
            // Header: log_<type> columns then prob.
            if (cells.size() < 2 || cells.back() != "prob")
                throw param_error(path + ":1: expected header 'log_<type>,...,prob'");
            for (size_t i = 0; i + 1 < cells.size(); ++i) {
                if (cells[i].rfind("log_", 0) != 0)
                    throw param_error(path + ":1: scenario columns must be named log_<type>");
                set.type_names.push_back(cells[i].substr(4));
            }
            continue;
        }
        if (cells.size() != set.type_names.size() + 1)
            throw param_error(path + ":" + std::to_string(line_no) + ": wrong column count");
        scenario sc;
        for (size_t i = 0; i < cells.size(); ++i) {
            char* end = nullptr;
            double v = std::strtod(cells[i].c_str(), &end);
            if (end == cells[i].c_str() || *end != '\0')
                throw param_error(path + ":" + std::to_string(line_no) + ": bad number '" +
                                  cells[i] + "'");
            if (i + 1 == cells.size())
                sc.prob = v;
            else
                sc.log_pops.push_back(v);
        }
        set.scenarios.push_back(sc);
    }
    if (set.scenarios.empty()) throw param_error(path + ": no scenarios");
    double total = 0.0;
    for (const auto& sc : set.scenarios) {
        if (sc.prob < 0.0) throw param_error(path + ": negative scenario probability");
        for (double lp : sc.log_pops)
            if (!std::isfinite(lp)) throw param_error(path + ": non-finite log population");
        total += sc.prob;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw param_error(path + ": scenario probabilities sum to " + fmt(total) + ", not 1");
    std::stable_sort(set.scenarios.begin(), set.scenarios.end(),
                     [](const scenario& a, const scenario& b) { return a.prob > b.prob; });
    return set;
}

void save_scenarios(const scenario_set& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw param_error("cannot write scenario file: " + path);
    for (size_t i = 0; i < set.type_names.size(); ++i) out << "log_" << set.type_names[i] << ",";
    out << "prob\n";
    out.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& sc : set.scenarios) {
        for (double lp : sc.log_pops) out << lp << ",";
        out << sc.prob << "\n";
    }
    if (!out) throw param_error("write failed: " + path);
}

}  // namespace chemoplan
