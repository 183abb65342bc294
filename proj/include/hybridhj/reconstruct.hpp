// Trajectory reconstruction from a solution family: integrate the projected
// base dynamics per region, transfer parameters at impacts, lift through
// gamma, and compare against direct hybrid simulation.
#pragma once

#include "hybridhj/verify.hpp"

namespace hybridhj {

struct BaseSegment {
    std::vector<double> t;
    std::vector<BasePoint> q;
    int region_id = 0;
    Vec lambda;
};

struct TransferRecord {
    double t;
    int guard_id;
    int from_region;
    int to_region;
    Vec lambda_before;
    Vec lambda_after;
};

struct ReconstructionRun {
    std::vector<BaseSegment> base_segments;
    HybridTrajectory lifted;
    std::vector<TransferRecord> transfer_log;
};

// Runs the reconstruction loop from q0 in region0 with parameters lambda0.
// Guards and admissibility are evaluated on the lifted state
// (q, gamma_k(q; lambda_k)); at each impact the parameters transfer through
// tau and the run continues in the region probed just past the impact point.
// The lifted impact state must match the reset image of the pre-impact lift
// within tol.lift_tol (LiftMismatch otherwise). A residual pre-check above
// 1e-6 only warns: non-solutions may be studied deliberately.
ReconstructionRun reconstruct(const HybridSystemSpec& spec, const SolutionFamily& family,
                              const TransferMap& transfer, const BasePoint& q0, const Vec& lambda0,
                              int region0, double horizon, const SimulationPolicy& policy);

struct ComparisonReport {
    std::vector<double> per_segment_sup;
    std::vector<double> impact_time_diffs;
    bool impact_count_mismatch = false;
    int impact_count_a = 0;
    int impact_count_b = 0;
    double sup_discrepancy = 0.0;
    double max_impact_time_diff = 0.0;
};

// Sup-norm discrepancy between two trajectories over the same horizon:
// aligns segments by index, evaluates b's dense output at a's sample times
// (allowing endpoint extrapolation within the impact-time mismatch), and
// reports per-segment sups plus impact-time differences.
ComparisonReport compare(const HybridTrajectory& a, const HybridTrajectory& b,
                         const Tolerances& tol = {});

} // namespace hybridhj
