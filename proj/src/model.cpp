#include "hybridhj/model.hpp"

#include <cstdio>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace hybridhj {

namespace {

void require_finite_derivative(const Vec& v, const char* what) {
    if (!v.allFinite()) {
        throw NonFiniteDerivative(std::string(what) + " has non-finite components");
    }
}

std::string format_residual(double r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", r);
    return buf;
}

Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& v, double step) {
    Vec grad(v.size());
    Vec probe = v;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        probe(i) = v(i) + step;
        const double hi = f(probe);
        probe(i) = v(i) - step;
        const double lo = f(probe);
        probe(i) = v(i);
        grad(i) = (hi - lo) / (2.0 * step);
    }
    return grad;
}

} // namespace

Vec fd_dH_dq(const DynamicsModel& model, const PhasePoint& x, double step) {
    const double s = step > 0.0 ? step : Tolerances{}.fd_step(x.q);
    return central_gradient(
        [&](const Vec& q) { return model.H(PhasePoint{q, x.p}); }, x.q, s);
}

Vec fd_dH_dp(const DynamicsModel& model, const PhasePoint& x, double step) {
    const double s = step > 0.0 ? step : Tolerances{}.fd_step(x.p);
    return central_gradient(
        [&](const Vec& p) { return model.H(PhasePoint{x.q, p}); }, x.p, s);
}

FieldValue hamiltonian_field(const DynamicsModel& model, const PhasePoint& x) {
    FieldValue out{model.dH_dp(x), -model.dH_dq(x)};
    require_finite_derivative(out.qdot, "dH_dp");
    require_finite_derivative(out.pdot, "dH_dq");
    return out;
}

FieldValue forced_field(const DynamicsModel& model, const PhasePoint& x) {
    if (!model.force) throw Error("forced_field: model has no force");
    FieldValue out{model.dH_dp(x), -model.dH_dq(x)};
    const Vec f = model.force->F(x);
    require_finite_derivative(out.qdot, "dH_dp");
    require_finite_derivative(out.pdot, "dH_dq");
    require_finite_derivative(f, "force");
    out.pdot -= f;
    return out;
}

NonholonomicFieldValue nonholonomic_field(const DynamicsModel& model, const PhasePoint& x,
                                          const Tolerances& tol, bool enforce_membership) {
    if (!model.constraints || !model.mass_matrix) {
        throw Error("nonholonomic_field: model has no constraint set / mass matrix");
    }
    if (enforce_membership) {
        const ConstraintCheck membership = is_on_constraint(model, x, tol);
        if (!membership.on) {
            throw ConstraintViolation(
                "nonholonomic_field: state off the momentum constraint, residual " +
                format_residual(membership.residual));
        }
    }

    const BasePoint base{x.q};
    const Mat mu = model.constraints->mu(base);
    const Vec qdot = model.dH_dp(x);
    const Vec dHq = model.dH_dq(x);
    require_finite_derivative(qdot, "dH_dp");
    require_finite_derivative(dHq, "dH_dq");

    // b_a = (grad_q [mu^a . qdot]) . qdot - mu^a . dH_dq, the tangency
    // right-hand side, with the q-gradient taken at frozen qdot.
    const int k = model.constraints->k;
    Vec b(k);
    if (model.constraints->mu_jacobian) {
        const std::vector<Mat> dmu = model.constraints->mu_jacobian(base);
        for (int a = 0; a < k; ++a) {
            double drift = 0.0;
            for (int j = 0; j < model.n; ++j) {
                drift += dmu[static_cast<std::size_t>(j)].row(a).dot(qdot) * qdot(j);
            }
            b(a) = drift - mu.row(a).dot(dHq);
        }
    } else {
        const double step = tol.fd_step(x.q);
        for (int a = 0; a < k; ++a) {
            const Vec grad = central_gradient(
                [&](const Vec& q) {
                    return model.constraints->mu(BasePoint{q}).row(a).dot(qdot);
                },
                x.q, step);
            b(a) = grad.dot(qdot) - mu.row(a).dot(dHq);
        }
    }

    const Mat g = model.mass_matrix(base);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success) {
        throw SingularMultiplierSystem("nonholonomic_field: mass matrix not positive definite");
    }
    const Mat g_inv_mu_t = llt.solve(mu.transpose());
    const Mat A = mu * g_inv_mu_t;

    // Condition estimate on the (symmetric positive semidefinite) Gram matrix.
    Eigen::SelfAdjointEigenSolver<Mat> eig(A);
    const double ev_min = eig.eigenvalues().minCoeff();
    const double ev_max = eig.eigenvalues().maxCoeff();
    if (!(ev_min > 0.0) || ev_max / ev_min > tol.cond_tol) {
        throw SingularMultiplierSystem("nonholonomic_field: multiplier system condition " +
                                       std::to_string(ev_min > 0.0 ? ev_max / ev_min : -1.0) +
                                       " beyond limit");
    }
    const Vec lambda = A.ldlt().solve(b);

    NonholonomicFieldValue out;
    out.qdot = qdot;
    out.pdot = -dHq - mu.transpose() * lambda;
    out.lambda = lambda;
    return out;
}

ConstraintCheck is_on_constraint(const DynamicsModel& model, const PhasePoint& x,
                                 const Tolerances& tol) {
    if (!model.constraints || !model.mass_matrix) {
        throw Error("is_on_constraint: model has no constraint set / mass matrix");
    }
    const BasePoint base{x.q};
    const Mat mu = model.constraints->mu(base);
    const Mat g = model.mass_matrix(base);
    const Vec v = g.llt().solve(x.p); // g^{ij} p_j
    const double residual = (mu * v).cwiseAbs().maxCoeff();
    return ConstraintCheck{residual <= tol.constraint_tol, residual};
}

FieldValue eval_field(const DynamicsModel& model, FieldKind kind, const PhasePoint& x,
                      const Tolerances& tol, bool enforce_membership) {
    switch (kind) {
        case FieldKind::hamiltonian:
            return hamiltonian_field(model, x);
        case FieldKind::forced:
            return forced_field(model, x);
        case FieldKind::nonholonomic: {
            const NonholonomicFieldValue v = nonholonomic_field(model, x, tol, enforce_membership);
            return FieldValue{v.qdot, v.pdot};
        }
        case FieldKind::custom: {
            if (!model.flow) throw Error("eval_field: custom kind without model.flow");
            FieldValue out;
            model.flow(x, out.qdot, out.pdot);
            require_finite_derivative(out.qdot, "flow qdot");
            require_finite_derivative(out.pdot, "flow pdot");
            return out;
        }
    }
    throw Error("eval_field: unknown field kind");
}

Vec projected_field(const DynamicsModel& model, FieldKind kind,
                    const std::function<Covector(const BasePoint&)>& gamma, const BasePoint& q,
                    const Tolerances&) {
    const Covector p = gamma(q);
    if (!p.allFinite()) throw NonFiniteDerivative("projected_field: gamma(q) not finite");
    const PhasePoint lifted{q.q, p};
    if (kind == FieldKind::custom) {
        if (!model.flow) throw Error("projected_field: custom kind without model.flow");
        Vec qdot, pdot;
        model.flow(lifted, qdot, pdot);
        require_finite_derivative(qdot, "flow qdot");
        return qdot;
    }
    // The q-component of all three canonical field variants is dH_dp, so the
    // projection shares that code path bitwise. The constrained variant skips
    // the membership precondition: the lift is only required to satisfy it
    // where the family itself does.
    const Vec qdot = model.dH_dp(lifted);
    require_finite_derivative(qdot, "dH_dp");
    return qdot;
}

void validate_constraint_geometry(const DynamicsModel& model, const BasePoint& q,
                                  const Tolerances& tol) {
    if (!model.constraints || !model.mass_matrix) {
        throw Error("validate_constraint_geometry: model has no constraint set / mass matrix");
    }
    const Mat g = model.mass_matrix(q);
    if (!g.isApprox(g.transpose(), 1e-12)) {
        throw Error("mass matrix not symmetric");
    }
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success) {
        throw Error("mass matrix not positive definite (Cholesky failed)");
    }
    const Mat mu = model.constraints->mu(q);
    Eigen::JacobiSVD<Mat> svd(mu);
    const Vec sv = svd.singularValues();
    const double cut = tol.rank_tol_factor * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut) ++rank;
    }
    if (rank < model.constraints->k) {
        throw Error("constraint rows rank-deficient at evaluated point");
    }
}

} // namespace hybridhj
