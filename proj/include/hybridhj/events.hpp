// Guard surfaces and event localization on dense ODE output.
#pragma once

#include <functional>
#include <optional>

#include "hybridhj/integrate.hpp"
#include "hybridhj/types.hpp"

namespace hybridhj {

enum class GuardDirection { decreasing, increasing, either };

// Switching-surface component: zero set of g restricted to the crossing
// direction, optionally gated by an admissibility predicate (evaluated at
// the located crossing; an inadmissible crossing is ignored and the flow
// continues through the surface).
struct GuardSpec {
    std::function<double(const PhasePoint&)> g;
    GuardDirection direction = GuardDirection::decreasing;
    int id = 0;
    std::function<bool(const PhasePoint&)> admissibility;
};

// Splits a flattened state [q; p] back into a phase point.
PhasePoint unpack_state(const Vec& x);
Vec pack_state(const PhasePoint& x);

// True when the (g_a, g_b) pair is a qualifying sign change for the guard's
// direction. Touching zero at the right end counts; a start already on the
// surface (|g_a| <= guard_tol) does not, which encodes post-impact clearance.
bool guard_triggers(const GuardSpec& guard, double g_a, double g_b, double guard_tol);

// Persistent trigger state for one guard across successive samples of g
// along a trajectory. The guard arms once g clears the tolerance band on
// the approach side and fires on the first later sample at or past the
// surface. Unlike a per-interval pair test, a sample landing inside the
// band cannot hide a crossing, while a start on the surface stays quiet
// until the flow has genuinely departed (post-impact clearance).
struct GuardScanState {
    bool armed_dec = false;
    bool armed_inc = false;
};

// Seeds the armed flags from the first sample without firing.
void guard_scan_seed(GuardScanState& st, double g, double guard_tol);

// Advances the scan by one sample; true when a directional crossing fires
// on this transition. The fired direction is consumed and re-arms only
// after g clears the band on the approach side again.
bool guard_scan_advance(const GuardSpec& guard, GuardScanState& st, double g, double guard_tol);

// Root of g(x(t)) in [t_a, t_b]: bisection on the dense output until the
// bracket width drops below time_tol, followed by secant polish so the
// residual |g| lands near roundoff rather than at the bisection bound.
// If |g(x(t_a))| <= guard_tol the start itself is returned.
// Throws BracketLost when the directional sign change is absent.
double locate_event(const DenseOutput& dense, const GuardSpec& guard, double t_a, double t_b,
                    const Tolerances& tol = {});

struct LocatedEvent {
    double t_star;
    int guard_index; // index into the guards vector, not the guard id
};

// Earliest qualifying, admissible crossing among all guards in [t_a, t_b].
// Inadmissible crossings are skipped (with a warning) and the scan resumes
// just past them.
std::optional<LocatedEvent> earliest_event(const DenseOutput& dense,
                                           const std::vector<GuardSpec>& guards, double t_a,
                                           double t_b, const Tolerances& tol = {});

} // namespace hybridhj
