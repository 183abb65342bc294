#include "hybridhj/config.hpp"

#include "hybridhj/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hybridhj {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& raw, const std::string& context) {
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError(context + ": empty numeric value");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) {
        throw ConfigError(context + ": cannot parse number '" + s + "'");
    }
    return v;
}

bool parse_bool(const std::string& raw, const std::string& context) {
    const std::string s = trim(raw);
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError(context + ": expected true or false, got '" + s + "'");
}

std::vector<double> parse_list(const std::string& raw, const std::string& context) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_number(item, context));
    }
    if (out.empty()) throw ConfigError(context + ": empty list");
    return out;
}

double positive(double v, const std::string& context) {
    if (!(v > 0.0)) throw ConfigError(context + ": value must be positive");
    return v;
}

// Shared setter for the config parser and --set overrides.
void apply_kv(RunConfig& c, const std::string& section, const std::string& key,
              const std::string& value, const std::string& context) {
    if (section == "scenario") {
        if (key == "name") {
            c.scenario_name = trim(value);
            if (c.scenario_name.empty()) throw ConfigError(context + ": empty scenario name");
        } else {
            c.scenario_params[key] = parse_number(value, context);
        }
        return;
    }
    if (section == "run") {
        if (key == "x0") {
            c.x0 = parse_list(value, context);
        } else if (key == "horizon") {
            const double v = parse_number(value, context);
            if (v < 0.0) throw ConfigError(context + ": horizon must be nonnegative");
            c.horizon = v;
        } else if (key == "h") {
            c.h = positive(parse_number(value, context), context);
        } else if (key == "adaptive") {
            c.adaptive = parse_bool(value, context);
        } else if (key == "h_min") {
            c.h_min = positive(parse_number(value, context), context);
        } else {
            throw ConfigError(context + ": unknown key '" + key + "' in [run]");
        }
        return;
    }
    if (section == "tolerances") {
        Tolerances& t = c.tol;
        const double v = key == "max_impacts" ? 0.0 : parse_number(value, context);
        if (key == "guard_tol") t.guard_tol = positive(v, context);
        else if (key == "time_tol_scale") t.time_tol_scale = positive(v, context);
        else if (key == "energy_drift_tol") t.energy_drift_tol = positive(v, context);
        else if (key == "constraint_tol") t.constraint_tol = positive(v, context);
        else if (key == "cond_tol") t.cond_tol = positive(v, context);
        else if (key == "rank_tol_factor") t.rank_tol_factor = positive(v, context);
        else if (key == "fd_step_factor") t.fd_step_factor = positive(v, context);
        else if (key == "pass_tol_analytic") t.pass_tol_analytic = positive(v, context);
        else if (key == "pass_tol_fd") t.pass_tol_fd = positive(v, context);
        else if (key == "diffeo_tol") t.diffeo_tol = positive(v, context);
        else if (key == "lift_tol") t.lift_tol = positive(v, context);
        else if (key == "adm_tol") t.adm_tol = positive(v, context);
        else if (key == "compare_tol") t.compare_tol = positive(v, context);
        else if (key == "zeno_dt") t.zeno_dt = positive(v, context);
        else if (key == "chart_margin") t.chart_margin = positive(v, context);
        else if (key == "max_impacts") {
            const double raw = parse_number(value, context);
            const int n = static_cast<int>(raw);
            if (!(raw > 0.0) || static_cast<double>(n) != raw) {
                throw ConfigError(context + ": max_impacts must be a positive integer");
            }
            t.max_impacts = n;
        } else {
            throw ConfigError(context + ": unknown key '" + key + "' in [tolerances]");
        }
        return;
    }
    if (section == "family") {
        if (key == "lambda0") {
            c.lambda0 = parse_list(value, context);
        } else if (key == "region0") {
            const double raw = parse_number(value, context);
            const int n = static_cast<int>(raw);
            if (static_cast<double>(n) != raw) {
                throw ConfigError(context + ": region0 must be an integer");
            }
            c.region0 = n;
        } else {
            throw ConfigError(context + ": unknown key '" + key + "' in [family]");
        }
        return;
    }
    if (section == "output") {
        if (key == "dir") {
            c.out_dir = trim(value);
            if (c.out_dir.empty()) throw ConfigError(context + ": empty output dir");
        } else {
            throw ConfigError(context + ": unknown key '" + key + "' in [output]");
        }
        return;
    }
    throw ConfigError(context + ": unknown section '" + section + "'");
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        const std::string context = "line " + std::to_string(line_no);
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(context + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "scenario" && section != "run" && section != "tolerances" &&
                section != "family" && section != "output") {
                throw ConfigError(context + ": unknown section '" + section + "'");
            }
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(context + ": expected 'key = value'");
        }
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(context + ": empty key");
        if (section.empty()) {
            throw ConfigError(context + ": key '" + key + "' appears before any section");
        }
        apply_kv(c, section, key, value, context);
    }
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

std::string join_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ", ";
        out += io::fmt17(v[i]);
    }
    return out;
}

} // namespace

std::string serialize_config(const RunConfig& c) {
    std::string out;
    out += "[scenario]\n";
    out += "name = " + c.scenario_name + "\n";
    for (const auto& [key, value] : c.scenario_params) {
        out += key + " = " + io::fmt17(value) + "\n";
    }
    out += "\n[run]\n";
    if (c.x0) out += "x0 = " + join_list(*c.x0) + "\n";
    if (c.horizon) out += "horizon = " + io::fmt17(*c.horizon) + "\n";
    out += "h = " + io::fmt17(c.h) + "\n";
    out += std::string("adaptive = ") + (c.adaptive ? "true" : "false") + "\n";
    out += "h_min = " + io::fmt17(c.h_min) + "\n";
    out += "\n[tolerances]\n";
    const Tolerances& t = c.tol;
    out += "guard_tol = " + io::fmt17(t.guard_tol) + "\n";
    out += "time_tol_scale = " + io::fmt17(t.time_tol_scale) + "\n";
    out += "energy_drift_tol = " + io::fmt17(t.energy_drift_tol) + "\n";
    out += "constraint_tol = " + io::fmt17(t.constraint_tol) + "\n";
    out += "cond_tol = " + io::fmt17(t.cond_tol) + "\n";
    out += "rank_tol_factor = " + io::fmt17(t.rank_tol_factor) + "\n";
    out += "fd_step_factor = " + io::fmt17(t.fd_step_factor) + "\n";
    out += "pass_tol_analytic = " + io::fmt17(t.pass_tol_analytic) + "\n";
    out += "pass_tol_fd = " + io::fmt17(t.pass_tol_fd) + "\n";
    out += "diffeo_tol = " + io::fmt17(t.diffeo_tol) + "\n";
    out += "lift_tol = " + io::fmt17(t.lift_tol) + "\n";
    out += "adm_tol = " + io::fmt17(t.adm_tol) + "\n";
    out += "compare_tol = " + io::fmt17(t.compare_tol) + "\n";
    out += "zeno_dt = " + io::fmt17(t.zeno_dt) + "\n";
    out += "max_impacts = " + std::to_string(t.max_impacts) + "\n";
    out += "chart_margin = " + io::fmt17(t.chart_margin) + "\n";
    out += "\n[family]\n";
    if (c.lambda0) out += "lambda0 = " + join_list(*c.lambda0) + "\n";
    out += "region0 = " + std::to_string(c.region0) + "\n";
    out += "\n[output]\n";
    out += "dir = " + c.out_dir + "\n";
    return out;
}

void apply_set_override(RunConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    }
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (key.empty()) throw ConfigError("--set with empty key");
    const std::string context = "--set " + assignment;
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        apply_kv(c, "scenario", key, value, context);
        return;
    }
    const std::string section = key.substr(0, dot);
    const std::string inner = trim(key.substr(dot + 1));
    if (inner.empty()) throw ConfigError(context + ": empty key after section");
    apply_kv(c, section, inner, value, context);
}

} // namespace hybridhj
