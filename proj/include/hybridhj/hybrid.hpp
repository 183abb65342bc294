// Event-driven hybrid execution: flow, locate, reset, repeat.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hybridhj/events.hpp"
#include "hybridhj/integrate.hpp"
#include "hybridhj/model.hpp"

namespace hybridhj {

// Impact map x+ = delta(x-), applied at located guard crossings.
struct ResetMap {
    std::function<PhasePoint(const PhasePoint&)> delta;
};

struct HybridSystemSpec {
    DynamicsModel model;
    FieldKind kind = FieldKind::hamiltonian;
    std::vector<GuardSpec> guards;
    ResetMap reset;
};

struct ImpactEvent {
    double t;
    int guard_id;
    PhasePoint x_minus;
    PhasePoint x_plus;
};

enum class Termination { horizon_reached, zeno_guard, error };

// One inter-impact interval. Rows run from the segment's initial state
// (x+ of the previous event, or the initial condition) to the pre-impact
// state x- at the terminal event time; the hybrid flow's value AT an impact
// time is the next segment's first state (the x+ convention).
struct TrajectorySegment {
    std::vector<double> t;
    std::vector<PhasePoint> x;
    DenseOutput dense;
};

struct HybridTrajectory {
    std::vector<TrajectorySegment> segments;
    std::vector<ImpactEvent> events;
    Termination termination = Termination::horizon_reached;
    std::string termination_detail;

    // State at time t with the x+ convention at impact times.
    PhasePoint at(double t) const;
    double t_end() const;
};

struct SimulationPolicy {
    StepPolicy step;
    Tolerances tol;
};

// Integrates the model's field with the given sampling policy; thin wrapper
// that flattens phase points for the generic RK4 core.
struct SegmentResult {
    std::vector<double> t;
    std::vector<PhasePoint> x;
    DenseOutput dense;
};
SegmentResult integrate_segment(const DynamicsModel& model, FieldKind kind, const PhasePoint& x0,
                                double t0, double t_end, const StepPolicy& policy,
                                const Tolerances& tol = {});

// Runs the hybrid system from x0 until the horizon, an error, or the Zeno
// guard (impact count above tol.max_impacts, or consecutive impacts closer
// than tol.zeno_dt). Requires x0 off the switching surface and, for
// constrained models, on the momentum constraint; every applied reset is
// checked for constraint membership (ResetOffConstraint) and for departure
// from the guard surface.
HybridTrajectory simulate_hybrid(const HybridSystemSpec& spec, const PhasePoint& x0,
                                 double horizon, const SimulationPolicy& policy);

struct ConstantReport {
    double max_drift;
    double reference;  // f(x0)
    double t_worst;
};

// Max |f(x(t)) - f(x0)| over every stored sample, both event sides included.
ConstantReport check_hybrid_constant(const std::function<double(const PhasePoint&)>& f,
                                     const HybridTrajectory& traj);

} // namespace hybridhj
