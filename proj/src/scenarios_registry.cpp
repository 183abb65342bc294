#include "scenarios_common.hpp"

namespace hybridhj::scenarios {

double halton(std::size_t index, unsigned base) {
    double f = 1.0;
    double r = 0.0;
    std::size_t i = index + 1;
    while (i > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

std::vector<ScenarioDescriptor> scenario_descriptors() {
    return {
        {"billiard",
         "free particle in a disk with specular reflection at the rim",
         {{"m", 1.0, "particle mass"}, {"R", 1.0, "disk radius"}}},
        {"rolling_disk",
         "vertically rolling disk bouncing between two walls",
         {{"m", 1.0, "disk mass"},
          {"k", 1.0, "radius of gyration"},
          {"R", 1.0, "disk radius"},
          {"e", 0.8, "restitution factor"},
          {"alpha", 3.0, "wall separation in units of R (walls at y = R and y = alpha R - R)"}}},
        {"rolling_disk_forced",
         "rolling disk with a vertical force linear in the vertical momentum",
         {{"m", 1.0, "disk mass"},
          {"k", 1.0, "radius of gyration"},
          {"R", 1.0, "disk radius"},
          {"e", 0.8, "restitution factor"},
          {"alpha", 3.0, "wall separation in units of R"},
          {"B", 0.1, "force coefficient"},
          {"family_slope", 0.1, "dy slope of the solution family; defaults to B*m, "
                                "perturb it to break the stationary equation"}}},
        {"nh_particle",
         "particle with the velocity constraint zdot = y xdot between walls y = 0 and y = a",
         {{"a", 1.0, "upper wall position"}, {"e", 0.8, "restitution factor"}}},
        {"rigid_body",
         "generalized rigid body with a momentum constraint; impacts at alpha = 0 scale the "
         "first body momentum",
         {{"I11", 1.0, "first inertia entry"},
          {"I22", 2.0, "second inertia entry"},
          {"I33", 3.0, "third inertia entry"},
          {"mu1", 1.0, "constraint covector, first entry"},
          {"mu2", 1.0, "constraint covector, second entry"},
          {"mu3", 1.0, "constraint covector, third entry"},
          {"epsilon", 0.9, "impact scaling of the first body momentum"}}},
    };
}

Scenario make_scenario(const std::string& name, const std::map<std::string, double>& overrides) {
    if (name == "billiard") return billiard(overrides);
    if (name == "rolling_disk") return rolling_disk(false, overrides);
    if (name == "rolling_disk_forced") return rolling_disk(true, overrides);
    if (name == "nh_particle") return nonholonomic_particle(overrides);
    if (name == "rigid_body") return rigid_body_so3(overrides);
    std::string known;
    for (const ScenarioDescriptor& desc : scenario_descriptors()) {
        if (!known.empty()) known += ", ";
        known += desc.name;
    }
    throw ConfigError("unknown scenario '" + name + "'; available: " + known);
}

} // namespace hybridhj::scenarios
