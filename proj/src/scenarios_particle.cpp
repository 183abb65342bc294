#include "scenarios_common.hpp"

#include <cmath>

namespace hybridhj::scenarios {

using detail::box;
using detail::merge_params;
using detail::v3;

namespace {

// Momentum components of the family at (q; lambda): the vector lambda packs
// (lam, E, s) with s = +-1 selecting the vertical branch.
Covector particle_gamma(const BasePoint& q, const Vec& lambda) {
    const double lam = lambda(0);
    const double E = lambda(1);
    const double s = lambda(2) >= 0.0 ? 1.0 : -1.0;
    const double rad = 2.0 * E - lam * lam;
    if (rad < 0.0) {
        throw BadParameters("nh_particle family requires 2E >= lambda^2");
    }
    const double y = q.q(1);
    const double root = std::sqrt(1.0 + y * y);
    return v3(lam / root, s * std::sqrt(rad), lam * y / root);
}

} // namespace

Scenario nonholonomic_particle(const std::map<std::string, double>& overrides) {
    auto params = merge_params({{"a", 1.0}, {"e", 0.8}}, overrides, "nh_particle");
    const double a = params.at("a");
    const double e = params.at("e");
    if (!(a > 0.0)) throw BadParameters("nh_particle: a must be positive");
    if (!(e > 0.0 && e <= 1.0)) throw BadParameters("nh_particle: e must lie in (0, 1]");

    Scenario sc;
    sc.name = "nh_particle";
    sc.params = params;
    sc.coord_names = {"x", "y", "z"};

    DynamicsModel model;
    model.n = 3;
    model.H = [](const PhasePoint& x) { return 0.5 * x.p.squaredNorm(); };
    model.dH_dq = [](const PhasePoint&) { return Vec(Vec::Zero(3)); };
    model.dH_dp = [](const PhasePoint& x) { return Vec(x.p); };
    model.mass_matrix = [](const BasePoint&) { return Mat(Mat::Identity(3, 3)); };
    ConstraintSet cs;
    cs.k = 1;
    cs.mu = [](const BasePoint& q) {
        Mat mu(1, 3);
        mu << -q.q(1), 0.0, 1.0;
        return mu;
    };
    cs.mu_jacobian = [](const BasePoint&) {
        std::vector<Mat> d(3, Mat::Zero(1, 3));
        d[1](0, 0) = -1.0;
        return d;
    };
    model.constraints = cs;

    GuardSpec floor;
    floor.id = 0;
    floor.direction = GuardDirection::decreasing;
    floor.g = [](const PhasePoint& x) { return x.q(1); };
    GuardSpec ceiling;
    ceiling.id = 1;
    ceiling.direction = GuardDirection::decreasing;
    ceiling.g = [a](const PhasePoint& x) { return a - x.q(1); };

    ResetMap reset;
    reset.delta = [e](const PhasePoint& x) {
        return PhasePoint{x.q, v3(x.p(0), -e * x.p(1), x.p(2))};
    };

    sc.system = HybridSystemSpec{model, FieldKind::nonholonomic, {floor, ceiling}, reset};

    SolutionFamily fam;
    fam.param_dim = 2;
    fam.regions = {Region{0, [a](const BasePoint& q) { return q.q(1) > 0.0 && q.q(1) < a; }}};
    fam.gamma = [](int, const BasePoint& q, const Vec& lambda) {
        return particle_gamma(q, lambda);
    };
    fam.dgamma_dq = [](int, const BasePoint& q, const Vec& lambda) {
        const double lam = lambda(0);
        const double y = q.q(1);
        const double root = std::sqrt(1.0 + y * y);
        Mat J = Mat::Zero(3, 3);
        J(0, 1) = -lam * y / (root * root * root);
        J(2, 1) = lam / (root * root * root);
        return J;
    };
    fam.dgamma_dlambda = [](int, const BasePoint& q, const Vec& lambda) {
        const double lam = lambda(0);
        const double E = lambda(1);
        const double s = lambda(2) >= 0.0 ? 1.0 : -1.0;
        const double rad = 2.0 * E - lam * lam;
        if (rad <= 0.0) {
            throw BadParameters("nh_particle family Jacobian requires 2E > lambda^2");
        }
        const double y = q.q(1);
        const double root = std::sqrt(1.0 + y * y);
        Mat J(3, 2);
        J << 1.0 / root, 0.0,
            -s * lam / std::sqrt(rad), s / std::sqrt(rad),
            y / root, 0.0;
        return J;
    };
    sc.family = fam;

    // lam is untouched, the energy drops with the square of the restitution
    // factor, and the vertical branch flips.
    sc.transfer.tau = [e](int, int, const BasePoint&, const Vec& lambda) {
        const double lam = lambda(0);
        const double E = lambda(1);
        return Vec(v3(lam, e * e * E + 0.5 * (1.0 - e * e) * lam * lam, -lambda(2)));
    };
    // Alternative energy coefficient (1+e^2)/2; kept for study, fails the
    // relatedness identity whenever lam != 0 and e < 1.
    sc.alternative_transfer = TransferMap{[e](int, int, const BasePoint&, const Vec& lambda) {
        const double lam = lambda(0);
        const double E = lambda(1);
        return Vec(v3(lam, e * e * E + 0.5 * (1.0 + e * e) * lam * lam, -lambda(2)));
    }};

    sc.make_oracle = [a, e](const PhasePoint& x0, double horizon) {
        struct Node {
            double t;
            Vec q;
            Vec p;
        };
        std::vector<Node> nodes{{0.0, x0.q, x0.p}};
        Oracle oracle;
        double t = 0.0;
        Vec q = x0.q;
        Vec p = x0.p;
        for (int bounce = 0; bounce < 100000; ++bounce) {
            const double py = p(1);
            if (py == 0.0) break;
            const double target = py < 0.0 ? 0.0 : a;
            const double dt = (target - q(1)) / py;
            if (!(dt > 0.0) || t + dt > horizon) break;
            t += dt;
            const double y0 = q(1);
            const double lam = p(0) * std::sqrt(1.0 + y0 * y0);
            const double root = std::sqrt(1.0 + target * target);
            const double x_hit =
                q(0) + (lam / py) * (std::asinh(target) - std::asinh(y0));
            const double z_hit = q(2) + (lam / py) * (root - std::sqrt(1.0 + y0 * y0));
            q = v3(x_hit, target, z_hit);
            p = v3(lam / root, -e * py, target * lam / root);
            nodes.push_back({t, q, p});
            oracle.impact_times.push_back(t);
        }
        oracle.at = [nodes](double t_eval) {
            std::size_t i = nodes.size() - 1;
            while (i > 0 && nodes[i].t > t_eval) --i;
            const Node& nd = nodes[i];
            const double dt = t_eval - nd.t;
            const double y0 = nd.q(1);
            const double py = nd.p(1);
            if (py == 0.0) {
                const double x = nd.q(0) + nd.p(0) * dt;
                return PhasePoint{v3(x, y0, nd.q(2) + y0 * nd.p(0) * dt), nd.p};
            }
            const double y = y0 + py * dt;
            const double lam = nd.p(0) * std::sqrt(1.0 + y0 * y0);
            const double root = std::sqrt(1.0 + y * y);
            const double x = nd.q(0) + (lam / py) * (std::asinh(y) - std::asinh(y0));
            const double z = nd.q(2) + (lam / py) * (root - std::sqrt(1.0 + y0 * y0));
            return PhasePoint{v3(x, y, z), v3(lam / root, py, y * lam / root)};
        };
        return oracle;
    };

    sc.default_x0 =
        PhasePoint{v3(0.0, 0.5, 0.0), v3(2.0 / std::sqrt(5.0), -1.0, 1.0 / std::sqrt(5.0))};
    sc.default_horizon = 2.5;
    sc.default_lambda0 = v3(1.0, 1.0, -1.0);
    sc.default_region0 = 0;

    sc.hybrid_constants = {
        {"constraint", [](const PhasePoint& x) { return x.p(2) - x.q(1) * x.p(0); }},
        {"lambda_inv",
         [](const PhasePoint& x) { return x.p(0) * std::sqrt(1.0 + x.q(1) * x.q(1)); }},
    };
    sc.non_constants = {
        {"H", model.H},
        {"p_y", [](const PhasePoint& x) { return x.p(1); }},
    };

    sc.sample_interior = [a](int count) {
        std::vector<BasePoint> out;
        out.reserve(static_cast<std::size_t>(count));
        const double inset = 0.05 * a;
        for (int i = 0; i < count; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            out.push_back(BasePoint{v3(box(halton(idx, 2), -2.0, 2.0),
                                       box(halton(idx, 3), inset, a - inset),
                                       box(halton(idx, 5), -2.0, 2.0))});
        }
        return out;
    };
    sc.sample_impacts = [a](int count) {
        std::vector<ImpactSample> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const double y = (i % 2 == 0) ? 0.0 : a;
            out.push_back(ImpactSample{BasePoint{v3(box(halton(idx, 2), -2.0, 2.0), y,
                                                    box(halton(idx, 3), -2.0, 2.0))},
                                       0, 0});
        }
        return out;
    };
    sc.residual_lambdas = {v3(1.0, 1.0, 1.0), v3(1.0, 1.0, -1.0), v3(0.5, 2.0, 1.0),
                           v3(-1.2, 1.0, -1.0)};
    sc.transfer_lambdas = sc.residual_lambdas;

    sc.notes = "Free particle subject to the velocity constraint zdot = y xdot, bouncing "
               "between the walls y = 0 and y = a. The shipped transfer updates the energy "
               "with coefficient (1-e^2)/2 on lam^2, the value consistent with scaling the "
               "vertical momentum by e; the alternative transfer carries (1+e^2)/2 and fails "
               "the relatedness identity.";
    return sc;
}

} // namespace hybridhj::scenarios
