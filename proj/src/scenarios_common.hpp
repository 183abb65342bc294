// Internal helpers shared by the scenario constructors.
#pragma once

#include "hybridhj/scenarios.hpp"

namespace hybridhj::scenarios::detail {

// Applies overrides onto the scenario's default parameter map, rejecting
// names the scenario does not declare.
inline std::map<std::string, double> merge_params(std::map<std::string, double> defaults,
                                                  const std::map<std::string, double>& overrides,
                                                  const std::string& scenario) {
    for (const auto& [key, value] : overrides) {
        const auto it = defaults.find(key);
        if (it == defaults.end()) {
            throw ConfigError("unknown parameter '" + key + "' for scenario '" + scenario + "'");
        }
        it->second = value;
    }
    return defaults;
}

inline Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

inline Vec v3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

// Maps a unit sample into [lo, hi].
inline double box(double u, double lo, double hi) { return lo + u * (hi - lo); }

} // namespace hybridhj::scenarios::detail
