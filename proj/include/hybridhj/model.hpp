// Dynamics model and evaluation of the continuous vector fields:
// Hamiltonian, forced, nonholonomic (with constraint multipliers), plus the
// projected base field used by reconstruction.
#pragma once

#include <functional>
#include <optional>

#include "hybridhj/types.hpp"

namespace hybridhj {

// Fiber force F = F_i(q,p) dq^i (semibasic: components indexed by q only).
struct SemibasicForce {
    std::function<Vec(const PhasePoint&)> F;
};

// Linear velocity constraints mu^a_i(q) qdot^i = 0, a = 1..k.
struct ConstraintSet {
    int k = 0;
    // Row a holds mu^a(q).
    std::function<Mat(const BasePoint&)> mu;
    // Optional analytic derivative: entry [j] holds d(mu)/dq_j (k x n each).
    // When absent, directional derivatives fall back to central differences.
    std::function<std::vector<Mat>(const BasePoint&)> mu_jacobian;
};

// Which continuous field governs the flow between impacts.
enum class FieldKind { hamiltonian, forced, nonholonomic, custom };

// Hamiltonian with analytic partials, plus the optional force / constraint
// data that selects the field variant. `flow` overrides the canonical
// equations for models whose configuration coordinates are not conjugate to
// the stored momenta (the Euler-angle chart of the SO(3) scenario); it must
// keep the q-component consistent with projected_field.
struct DynamicsModel {
    int n = 0;
    std::function<double(const PhasePoint&)> H;
    std::function<Vec(const PhasePoint&)> dH_dq;
    std::function<Vec(const PhasePoint&)> dH_dp;
    std::optional<SemibasicForce> force;
    std::optional<ConstraintSet> constraints;
    std::function<Mat(const BasePoint&)> mass_matrix;
    std::function<void(const PhasePoint&, Vec&, Vec&)> flow;
};

struct FieldValue {
    Vec qdot;
    Vec pdot;
};

struct NonholonomicFieldValue {
    Vec qdot;
    Vec pdot;
    Vec lambda;
};

// Central-difference gradients of H, used as fallback and for consistency
// tests against the supplied analytic partials. Step 1e-6*(1+|q|) unless
// overridden.
Vec fd_dH_dq(const DynamicsModel& model, const PhasePoint& x, double step = 0.0);
Vec fd_dH_dp(const DynamicsModel& model, const PhasePoint& x, double step = 0.0);

// qdot = dH_dp, pdot = -dH_dq. Requires an unforced, unconstrained model.
FieldValue hamiltonian_field(const DynamicsModel& model, const PhasePoint& x);

// qdot = dH_dp, pdot = -dH_dq - F. Requires model.force.
FieldValue forced_field(const DynamicsModel& model, const PhasePoint& x);

// Constrained field: qdot = dH_dp and pdot = -dH_dq - lambda^T mu with the
// multiplier solving A lambda = b, A = mu g^{-1} mu^T,
// b = (grad_q(mu qdot)) qdot - mu dH_dq, which enforces d/dt[mu(q) qdot] = 0.
// Requires x on the momentum constraint within tol.constraint_tol. Internal
// Runge-Kutta stage states sit off the constraint surface at second order in
// the step by construction of any explicit scheme, so the integrator opts out
// of the membership precondition via enforce_membership=false; the multiplier
// system stays well posed there and accepted states are checked separately.
NonholonomicFieldValue nonholonomic_field(const DynamicsModel& model, const PhasePoint& x,
                                          const Tolerances& tol = {},
                                          bool enforce_membership = true);

// Membership test for the constraint codistribution: residual is
// max_a |mu^a_i g^{ij} p_j|, true iff residual <= tol.constraint_tol.
struct ConstraintCheck {
    bool on;
    double residual;
};
ConstraintCheck is_on_constraint(const DynamicsModel& model, const PhasePoint& x,
                                 const Tolerances& tol = {});

// Field dispatch on kind; `custom` evaluates model.flow. enforce_membership
// is forwarded to the constrained variant only.
FieldValue eval_field(const DynamicsModel& model, FieldKind kind, const PhasePoint& x,
                      const Tolerances& tol = {}, bool enforce_membership = true);

// Base velocity of the projected field at q through the one-form gamma:
// the q-component of the full field at (q, gamma(q)). Shares the field
// evaluators' code path so the two agree bitwise.
Vec projected_field(const DynamicsModel& model, FieldKind kind,
                    const std::function<Covector(const BasePoint&)>& gamma, const BasePoint& q,
                    const Tolerances& tol = {});

// Validates mass_matrix(q): symmetric positive definite (Cholesky) and
// constraint rows full rank (singular values above rank_tol_factor*sigma_max).
void validate_constraint_geometry(const DynamicsModel& model, const BasePoint& q,
                                  const Tolerances& tol = {});

} // namespace hybridhj
