// Core phase-space types, error hierarchy, and shared numeric tolerances.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace hybridhj {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Configuration point q of the base space, in global coordinates.
// Angle coordinates are kept unreduced during integration and only wrapped
// at output time.
struct BasePoint {
    Vec q;
};

// A point (q, p) of phase space in Darboux coordinates. q and p always have
// equal dimension; for the SO(3) scenario p holds the body momenta.
struct PhasePoint {
    Vec q;
    Vec p;

    int dim() const { return static_cast<int>(q.size()); }
};

// Value of a one-form at a point (covector components).
using Covector = Vec;

// Base class for every error raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonFiniteDerivative : Error {
    using Error::Error;
};
struct NonFiniteState : Error {
    using Error::Error;
};
struct StepUnderflow : Error {
    using Error::Error;
};
struct BracketLost : Error {
    using Error::Error;
};
struct SingularMultiplierSystem : Error {
    using Error::Error;
};
struct ConstraintViolation : Error {
    using Error::Error;
};
struct ResetOffConstraint : Error {
    using Error::Error;
};
struct RegionViolation : Error {
    using Error::Error;
};
struct RegionAmbiguous : Error {
    using Error::Error;
};
struct TransferUndefined : Error {
    using Error::Error;
};
struct IncomparableHorizons : Error {
    using Error::Error;
};
struct BadParameters : Error {
    using Error::Error;
};
struct ChartSingularity : Error {
    using Error::Error;
};
struct LiftMismatch : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

// Numeric tolerances shared across the library. Fields default to the
// project-wide pinned values; runs may override them through the config.
struct Tolerances {
    double guard_tol = 1e-10;       // |g| bound at a located impact
    double time_tol_scale = 1e-12;  // event bracket width, scaled by (1+|t|)
    double energy_drift_tol = 1e-8; // per unit time at the default step
    double constraint_tol = 1e-9;   // momentum-constraint membership bound
    double cond_tol = 1e12;         // multiplier Gram-system condition cap
    double rank_tol_factor = 1e-10; // rank cut as a fraction of sigma_max
    double fd_step_factor = 1e-6;   // central-difference step, scaled by (1+|q|)
    double pass_tol_analytic = 1e-8;
    double pass_tol_fd = 1e-5;
    double diffeo_tol = 1e-10;      // |det d(gamma)/d(lambda)| lower bound
    double lift_tol = 1e-8;         // reconstruction impact-matching bound
    double adm_tol = 1e-8;          // guard admissibility bound
    double compare_tol = 1e-6;      // direct-vs-reconstructed sup bound
    double zeno_dt = 1e-9;          // minimum gap between consecutive impacts
    int max_impacts = 10000;
    double chart_margin = 1e-3;     // ChartSingularity radius around beta = ±pi/2

    double time_tol(double t) const { return time_tol_scale * (1.0 + std::abs(t)); }
    double probe_dt(double t) const { return 10.0 * time_tol(t); }
    double fd_step(const Vec& v) const { return fd_step_factor * (1.0 + v.norm()); }
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require_finite_state(const PhasePoint& x, const char* where) {
    if (!x.q.allFinite() || !x.p.allFinite()) {
        throw NonFiniteState(std::string(where) + ": state has non-finite components");
    }
}

inline void require_finite_state(const Vec& v, const char* where) {
    if (!v.allFinite()) {
        throw NonFiniteState(std::string(where) + ": state has non-finite components");
    }
}

} // namespace hybridhj
