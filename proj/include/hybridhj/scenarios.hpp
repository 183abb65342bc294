// The four shipped systems as data + code: model, guards, reset, solution
// family, transfer map, closed-form oracles, defaults, and the sample
// generators their verification suites run on.
#pragma once

#include <map>
#include <optional>

#include "hybridhj/reconstruct.hpp"

namespace hybridhj::scenarios {

struct ParamSpec {
    std::string name;
    double value; // default
    std::string doc;
};

struct ScenarioDescriptor {
    std::string name;
    std::string doc;
    std::vector<ParamSpec> params;
};

// Exact trajectory evaluator built for one initial condition.
struct Oracle {
    std::function<PhasePoint(double)> at;
    std::vector<double> impact_times;
};

using Observable = std::pair<std::string, std::function<double(const PhasePoint&)>>;

struct Scenario {
    std::string name;
    std::map<std::string, double> params;
    std::vector<std::string> coord_names;

    HybridSystemSpec system;
    SolutionFamily family;
    TransferMap transfer;
    // Optional second transfer convention shipped for side-by-side study
    // (particle energy coefficient, forced-disk wall coordinate). The test
    // suite pins which convention satisfies the relatedness identity.
    std::optional<TransferMap> alternative_transfer;

    // Exact evaluator for initial conditions on the family's image; absent
    // for the SO(3) scenario (no closed chart solution).
    std::function<Oracle(const PhasePoint& x0, double horizon)> make_oracle;

    PhasePoint default_x0;
    double default_horizon = 1.0;
    Vec default_lambda0;
    int default_region0 = 0;

    std::vector<Observable> hybrid_constants;
    std::vector<Observable> non_constants;

    // Deterministic quasi-random sample generators over the region boxes and
    // the switching surface, plus the parameter grids the verification suite
    // evaluates (residual channels vs. transfer/completeness channels).
    std::function<std::vector<BasePoint>(int count)> sample_interior;
    std::function<std::vector<ImpactSample>(int count)> sample_impacts;
    std::vector<Vec> residual_lambdas;
    std::vector<Vec> transfer_lambdas;

    std::string notes;
};

// Free particle in the unit disk with reflecting boundary.
Scenario billiard(const std::map<std::string, double>& overrides = {});

// Vertically rolling disk between two walls; `forced` switches on the
// momentum-proportional vertical force and the sloped family.
Scenario rolling_disk(bool forced, const std::map<std::string, double>& overrides = {});

// Free particle with the nonholonomic constraint zdot = y xdot between the
// walls y = 0 and y = a.
Scenario nonholonomic_particle(const std::map<std::string, double>& overrides = {});

// Generalized rigid body on SO(3) in an Euler-angle chart, with a
// single-axis momentum constraint and an impact at alpha = 0 scaling the
// first body momentum.
Scenario rigid_body_so3(const std::map<std::string, double>& overrides = {});

std::vector<ScenarioDescriptor> scenario_descriptors();

// Lookup by registry name (billiard, rolling_disk, rolling_disk_forced,
// nh_particle, rigid_body). Throws ConfigError for unknown names or unknown
// parameter overrides.
Scenario make_scenario(const std::string& name,
                       const std::map<std::string, double>& overrides = {});

// Deterministic low-discrepancy sequence helpers shared by the samplers.
double halton(std::size_t index, unsigned base);

} // namespace hybridhj::scenarios
