#include "hybridhj/verify.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace hybridhj {

namespace {

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

void require_in_region(const SolutionFamily& family, int k, const std::vector<BasePoint>& samples) {
    const Region& reg = family.region(k);
    for (const BasePoint& q : samples) {
        if (!reg.contains(q)) {
            throw RegionViolation("sample leaves region " + std::to_string(k));
        }
    }
}

void track(ResidualChannel& ch, double value, const BasePoint& q) {
    if (value >= ch.max) {
        ch.max = value;
        ch.argmax = q;
    }
}

ResidualReport finalize(std::vector<ResidualChannel> channels, int sample_count, bool analytic,
                        const Tolerances& tol) {
    ResidualReport rep;
    rep.sample_count = sample_count;
    rep.analytic_jacobians = analytic;
    rep.pass_tol = analytic ? tol.pass_tol_analytic : tol.pass_tol_fd;
    rep.channels = std::move(channels);
    for (const ResidualChannel& ch : rep.channels) {
        if (ch.max >= rep.max_residual) {
            rep.max_residual = ch.max;
            rep.argmax = ch.argmax;
        }
    }
    return rep;
}

double closedness_defect(const Mat& J) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < J.cols(); ++j) {
            worst = std::max(worst, std::abs(J(i, j) - J(j, i)));
        }
    }
    return worst;
}

// Gradient of q -> H(q, gamma(q; lambda)), analytic chain rule when the
// family carries Jacobians, otherwise central differences of the composite.
Vec composite_gradient(const DynamicsModel& model, const SolutionFamily& family, int k,
                       const Vec& lambda, const BasePoint& q, bool analytic,
                       const Tolerances& tol) {
    if (analytic) {
        const Covector gp = family.gamma(k, q, lambda);
        const PhasePoint x{q.q, gp};
        const Mat J = family.dgamma_dq(k, q, lambda);
        return model.dH_dq(x) + J.transpose() * model.dH_dp(x);
    }
    return central_gradient(
        [&](const Vec& qv) {
            const BasePoint b{qv};
            return model.H(PhasePoint{qv, family.gamma(k, b, lambda)});
        },
        q.q, tol.fd_step(q.q));
}

} // namespace

const ResidualChannel* ResidualReport::channel(const std::string& name) const {
    for (const ResidualChannel& ch : channels) {
        if (ch.name == name) return &ch;
    }
    return nullptr;
}

const Region& SolutionFamily::region(int id) const {
    for (const Region& r : regions) {
        if (r.id == id) return r;
    }
    throw Error("unknown region id " + std::to_string(id));
}

Mat fd_dgamma_dq(const SolutionFamily& family, int region, const BasePoint& q, const Vec& lambda,
                 const Tolerances& tol) {
    const Eigen::Index n = q.q.size();
    const double step = tol.fd_step(q.q);
    Mat J(family.gamma(region, q, lambda).size(), n);
    Vec probe = q.q;
    for (Eigen::Index j = 0; j < n; ++j) {
        probe(j) = q.q(j) + step;
        const Covector hi = family.gamma(region, BasePoint{probe}, lambda);
        probe(j) = q.q(j) - step;
        const Covector lo = family.gamma(region, BasePoint{probe}, lambda);
        probe(j) = q.q(j);
        J.col(j) = (hi - lo) / (2.0 * step);
    }
    return J;
}

Mat fd_dgamma_dlambda(const SolutionFamily& family, int region, const BasePoint& q,
                      const Vec& lambda, const Tolerances& tol) {
    const int m = family.param_dim;
    const double step = tol.fd_step(lambda.head(m));
    Mat J(family.gamma(region, q, lambda).size(), m);
    Vec probe = lambda;
    for (int j = 0; j < m; ++j) {
        probe(j) = lambda(j) + step;
        const Covector hi = family.gamma(region, q, probe);
        probe(j) = lambda(j) - step;
        const Covector lo = family.gamma(region, q, probe);
        probe(j) = lambda(j);
        J.col(j) = (hi - lo) / (2.0 * step);
    }
    return J;
}

ResidualReport residual_conservative(const DynamicsModel& model, const SolutionFamily& family,
                                     int k, const Vec& lambda,
                                     const std::vector<BasePoint>& samples,
                                     const Tolerances& tol) {
    require_in_region(family, k, samples);
    const bool analytic = static_cast<bool>(family.dgamma_dq);
    ResidualChannel grad_ch{"gradient", 0.0, {}, 0.0};
    ResidualChannel closed_ch{"closedness", 0.0, {}, 0.0};
    for (const BasePoint& q : samples) {
        const Vec grad = composite_gradient(model, family, k, lambda, q, analytic, tol);
        track(grad_ch, grad.cwiseAbs().maxCoeff(), q);
        const Mat J = analytic ? family.dgamma_dq(k, q, lambda)
                               : fd_dgamma_dq(family, k, q, lambda, tol);
        track(closed_ch, closedness_defect(J), q);
    }
    return finalize({grad_ch, closed_ch}, static_cast<int>(samples.size()), analytic, tol);
}

ResidualReport residual_forced(const DynamicsModel& model, const SolutionFamily& family, int k,
                               const Vec& lambda, const std::vector<BasePoint>& samples,
                               const Tolerances& tol) {
    if (!model.force) throw Error("residual_forced: model has no force");
    require_in_region(family, k, samples);
    const bool analytic = static_cast<bool>(family.dgamma_dq);
    ResidualChannel grad_ch{"forced_gradient", 0.0, {}, 0.0};
    ResidualChannel closed_ch{"closedness", 0.0, {}, 0.0};
    for (const BasePoint& q : samples) {
        const Covector gp = family.gamma(k, q, lambda);
        const Vec grad = composite_gradient(model, family, k, lambda, q, analytic, tol);
        const Vec pulled = model.force->F(PhasePoint{q.q, gp});
        track(grad_ch, (grad + pulled).cwiseAbs().maxCoeff(), q);
        const Mat J = analytic ? family.dgamma_dq(k, q, lambda)
                               : fd_dgamma_dq(family, k, q, lambda, tol);
        track(closed_ch, closedness_defect(J), q);
    }
    return finalize({grad_ch, closed_ch}, static_cast<int>(samples.size()), analytic, tol);
}

ResidualReport residual_nonholonomic(const DynamicsModel& model, const SolutionFamily& family,
                                     int k, const Vec& lambda,
                                     const std::vector<BasePoint>& samples,
                                     const Tolerances& tol) {
    if (!model.constraints) throw Error("residual_nonholonomic: model has no constraints");
    require_in_region(family, k, samples);
    const bool analytic = static_cast<bool>(family.dgamma_dq);

    // Energy level estimated as the sample mean, so non-constancy of
    // H(q, gamma(q)) shows up as residual.
    double mean = 0.0;
    std::vector<double> energies;
    energies.reserve(samples.size());
    for (const BasePoint& q : samples) {
        const double e = model.H(PhasePoint{q.q, family.gamma(k, q, lambda)});
        energies.push_back(e);
        mean += e;
    }
    if (!samples.empty()) mean /= static_cast<double>(samples.size());

    ResidualChannel energy_ch{"energy", 0.0, {}, mean};
    ResidualChannel member_ch{"membership", 0.0, {}, 0.0};
    ResidualChannel aniso_ch{"anisotropic_closedness", 0.0, {}, 0.0};

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const BasePoint& q = samples[i];
        track(energy_ch, std::abs(energies[i] - mean), q);

        const Covector gp = family.gamma(k, q, lambda);
        const ConstraintCheck c = is_on_constraint(model, PhasePoint{q.q, gp}, tol);
        track(member_ch, c.residual, q);

        const Mat J = analytic ? family.dgamma_dq(k, q, lambda)
                               : fd_dgamma_dq(family, k, q, lambda, tol);
        const Mat antisym = J.transpose() - J;
        const Mat N = constraint_null_basis(model, q, tol);
        double worst = 0.0;
        for (Eigen::Index a = 0; a < N.cols(); ++a) {
            for (Eigen::Index b = a + 1; b < N.cols(); ++b) {
                worst = std::max(worst, std::abs(N.col(a).dot(antisym * N.col(b))));
            }
        }
        track(aniso_ch, worst, q);
    }
    return finalize({energy_ch, member_ch, aniso_ch}, static_cast<int>(samples.size()), analytic,
                    tol);
}

ResidualReport delta_relatedness_check(const HybridSystemSpec& spec, const SolutionFamily& family,
                                       const TransferMap& transfer,
                                       const std::vector<ImpactSample>& impact_samples,
                                       const std::vector<Vec>& lambdas, const Tolerances& tol) {
    ResidualChannel ch{"relatedness", 0.0, {}, 0.0};
    int count = 0;
    for (const ImpactSample& s : impact_samples) {
        for (const Vec& lambda : lambdas) {
            const Covector gk = family.gamma(s.from_region, s.q, lambda);
            const PhasePoint x_plus = spec.reset.delta(PhasePoint{s.q.q, gk});
            const Vec lambda_next = transfer.tau(s.from_region, s.to_region, s.q, lambda);
            const Covector gl = family.gamma(s.to_region, s.q, lambda_next);
            track(ch, (gl - x_plus.p).cwiseAbs().maxCoeff(), s.q);
            ++count;
        }
    }
    const bool analytic = static_cast<bool>(family.dgamma_dq);
    return finalize({ch}, count, analytic, tol);
}

Mat constraint_null_basis(const DynamicsModel& model, const BasePoint& q, const Tolerances& tol) {
    if (!model.constraints) throw Error("constraint_null_basis: model has no constraints");
    const Mat mu = model.constraints->mu(q);
    Eigen::JacobiSVD<Mat> svd(mu, Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    const double cut = tol.rank_tol_factor * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut) ++rank;
    }
    if (rank < model.constraints->k) {
        throw Error("constraint rows rank-deficient at evaluated point");
    }
    return svd.matrixV().rightCols(mu.cols() - rank);
}

std::vector<int> select_momentum_coords(const Mat& null_basis) {
    // Greedy rank-revealing row selection: repeatedly take the row with the
    // largest remaining norm, then project the others off it.
    const Eigen::Index n = null_basis.rows();
    const Eigen::Index m = null_basis.cols();
    Mat work = null_basis;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index step = 0; step < m; ++step) {
        int best = -1;
        double best_norm = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            const double norm = work.row(i).norm();
            if (norm > best_norm) {
                best_norm = norm;
                best = static_cast<int>(i);
            }
        }
        if (best < 0 || best_norm == 0.0) {
            throw Error("select_momentum_coords: null-space basis row-deficient");
        }
        used[static_cast<std::size_t>(best)] = true;
        picked.push_back(best);
        const Vec dir = work.row(best).normalized().transpose();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            work.row(i) -= work.row(i).dot(dir) * dir.transpose();
        }
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

CompletenessReport complete_solution_check(const HybridSystemSpec& spec,
                                           const SolutionFamily& family,
                                           const TransferMap& transfer, const SampleGrid& grid,
                                           const Tolerances& tol) {
    CompletenessReport rep;
    rep.diffeo_tol = tol.diffeo_tol;
    const bool analytic = static_cast<bool>(family.dgamma_dlambda);
    rep.pass_tol = analytic ? tol.pass_tol_analytic : tol.pass_tol_fd;

    const int m = family.param_dim;
    rep.min_abs_det = std::numeric_limits<double>::infinity();
    rep.diffeo_ok = true;
    for (const RegionSample& rs : grid.interior) {
        std::vector<int> rows;
        if (spec.model.constraints) {
            rows = select_momentum_coords(constraint_null_basis(spec.model, rs.q, tol));
        } else {
            if (spec.model.n != m) {
                throw Error("complete_solution_check: param_dim != n for an unconstrained model");
            }
            for (int i = 0; i < m; ++i) rows.push_back(i);
        }
        for (const Vec& lambda : grid.lambdas) {
            const Mat J = analytic ? family.dgamma_dlambda(rs.region, rs.q, lambda)
                                   : fd_dgamma_dlambda(family, rs.region, rs.q, lambda, tol);
            Mat sub(m, m);
            for (int r = 0; r < m; ++r) sub.row(r) = J.row(rows[static_cast<std::size_t>(r)]);
            const double det = std::abs(sub.determinant());
            if (det < rep.min_abs_det) {
                rep.min_abs_det = det;
                rep.diffeo_argmin = rs;
                rep.momentum_coords = rows;
            }
        }
    }
    if (grid.interior.empty() || grid.lambdas.empty()) {
        rep.min_abs_det = 0.0;
        rep.diffeo_ok = false;
    } else {
        rep.diffeo_ok = rep.min_abs_det > tol.diffeo_tol;
    }

    try {
        const ResidualReport rel =
            delta_relatedness_check(spec, family, transfer, grid.impacts, grid.lambdas, tol);
        rep.transfer_defined = true;
        rep.transfer_residual = rel.max_residual;
    } catch (const TransferUndefined& e) {
        rep.transfer_defined = false;
        rep.transfer_error = e.what();
        rep.transfer_residual = std::numeric_limits<double>::infinity();
    }
    return rep;
}

} // namespace hybridhj
