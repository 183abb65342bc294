// Run configuration: strict sectioned key/value files, canonical
// serialization, and CLI override merging.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hybridhj/types.hpp"

namespace hybridhj {

// Parsed run configuration. Sections: [scenario] (name + numeric parameter
// overrides), [run] (x0, horizon, step policy), [tolerances], [family]
// (lambda0, region0 for reconstruction), [output] (dir). Unknown sections or
// keys are rejected; scenario parameter names are validated against the
// scenario's schema at resolution time.
struct RunConfig {
    std::string scenario_name;
    std::map<std::string, double> scenario_params;

    std::optional<std::vector<double>> x0;
    std::optional<double> horizon;
    double h = 1e-3;
    bool adaptive = false;
    double h_min = 1e-12;

    Tolerances tol;

    std::optional<std::vector<double>> lambda0;
    int region0 = 0;

    std::string out_dir = "out";
};

// Parses the sectioned text format. Lines: `key = value`, `[section]`,
// blank, or `#`/`;` comments. Values: number, true/false, or a
// comma-separated number list. Throws ConfigError with line context.
RunConfig parse_config(const std::string& text);

RunConfig load_config_file(const std::string& path);

// Canonical rendering: fixed section and key order, %.17g numbers, lists
// comma-joined. parse(serialize(c)) == c and serialize is idempotent.
std::string serialize_config(const RunConfig& c);

// Applies one `key=value` override: bare keys target scenario parameters,
// `section.key` targets any section (e.g. run.h, tolerances.compare_tol).
void apply_set_override(RunConfig& c, const std::string& assignment);

} // namespace hybridhj
