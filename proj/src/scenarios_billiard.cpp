#include "scenarios_common.hpp"

#include <cmath>

namespace hybridhj::scenarios {

using detail::box;
using detail::merge_params;
using detail::v2;

Scenario billiard(const std::map<std::string, double>& overrides) {
    auto params = merge_params({{"m", 1.0}, {"R", 1.0}}, overrides, "billiard");
    const double m = params.at("m");
    const double R = params.at("R");
    if (!(m > 0.0) || !(R > 0.0)) throw BadParameters("billiard: m and R must be positive");

    Scenario sc;
    sc.name = "billiard";
    sc.params = params;
    sc.coord_names = {"x", "y"};

    DynamicsModel model;
    model.n = 2;
    model.H = [m](const PhasePoint& x) { return x.p.squaredNorm() / (2.0 * m); };
    model.dH_dq = [](const PhasePoint& x) { return Vec(Vec::Zero(x.q.size())); };
    model.dH_dp = [m](const PhasePoint& x) { return Vec(x.p / m); };
    model.mass_matrix = [m](const BasePoint& q) {
        return Mat(m * Mat::Identity(q.q.size(), q.q.size()));
    };

    GuardSpec wall;
    wall.id = 0;
    wall.direction = GuardDirection::decreasing;
    wall.g = [R](const PhasePoint& x) { return R * R - x.q.squaredNorm(); };

    ResetMap reset;
    reset.delta = [](const PhasePoint& x) {
        const Vec n = x.q.normalized();
        return PhasePoint{x.q, x.p - 2.0 * x.p.dot(n) * n};
    };

    sc.system = HybridSystemSpec{model, FieldKind::hamiltonian, {wall}, reset};

    SolutionFamily fam;
    fam.param_dim = 2;
    fam.regions = {Region{0, [R](const BasePoint& q) { return q.q.squaredNorm() < R * R; }}};
    fam.gamma = [](int, const BasePoint&, const Vec& lambda) { return Covector(lambda.head(2)); };
    fam.dgamma_dq = [](int, const BasePoint&, const Vec&) { return Mat(Mat::Zero(2, 2)); };
    fam.dgamma_dlambda = [](int, const BasePoint&, const Vec&) {
        return Mat(Mat::Identity(2, 2));
    };
    sc.family = fam;

    sc.transfer.tau = [](int, int, const BasePoint& q, const Vec& lambda) {
        const Vec n = q.q.normalized();
        Vec out = lambda;
        out.head(2) = lambda.head(2) - 2.0 * lambda.head(2).dot(n) * n;
        return out;
    };

    sc.make_oracle = [m, R](const PhasePoint& x0, double horizon) {
        struct Node {
            double t;
            Vec q;
            Vec p;
        };
        std::vector<Node> nodes{{0.0, x0.q, x0.p}};
        Oracle oracle;
        if (x0.p.norm() > 0.0) {
            double t = 0.0;
            Vec q = x0.q;
            Vec p = x0.p;
            for (int bounce = 0; bounce < 100000; ++bounce) {
                const Vec v = p / m;
                const double a = v.squaredNorm();
                const double b = q.dot(v);
                const double c = q.squaredNorm() - R * R;
                const double dt = (-b + std::sqrt(b * b - a * c)) / a;
                if (t + dt > horizon) break;
                t += dt;
                q = (q + v * dt).eval();
                const Vec n = q.normalized();
                p = (p - 2.0 * p.dot(n) * n).eval();
                nodes.push_back({t, q, p});
                oracle.impact_times.push_back(t);
            }
        }
        oracle.at = [m, nodes](double t) {
            std::size_t i = nodes.size() - 1;
            while (i > 0 && nodes[i].t > t) --i;
            const Node& nd = nodes[i];
            return PhasePoint{nd.q + (nd.p / m) * (t - nd.t), nd.p};
        };
        return oracle;
    };

    sc.default_x0 = PhasePoint{v2(0.0, 0.0), v2(1.0, 0.0)};
    sc.default_horizon = 10.0;
    sc.default_lambda0 = v2(1.0, 0.0);
    sc.default_region0 = 0;

    sc.hybrid_constants = {
        {"H", model.H},
        {"angular_momentum",
         [](const PhasePoint& x) { return x.q(0) * x.p(1) - x.q(1) * x.p(0); }},
    };
    sc.non_constants = {
        {"p_x", [](const PhasePoint& x) { return x.p(0); }},
        {"p_y", [](const PhasePoint& x) { return x.p(1); }},
    };

    sc.sample_interior = [R](int count) {
        std::vector<BasePoint> out;
        out.reserve(static_cast<std::size_t>(count));
        std::size_t idx = 0;
        while (static_cast<int>(out.size()) < count) {
            const double x = box(halton(idx, 2), -0.95 * R, 0.95 * R);
            const double y = box(halton(idx, 3), -0.95 * R, 0.95 * R);
            ++idx;
            Vec q = v2(x, y);
            if (q.squaredNorm() < 0.9025 * R * R) out.push_back(BasePoint{q});
        }
        return out;
    };
    sc.sample_impacts = [R](int count) {
        std::vector<ImpactSample> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const double theta = 2.0 * M_PI * halton(static_cast<std::size_t>(i), 2);
            out.push_back(ImpactSample{BasePoint{v2(R * std::cos(theta), R * std::sin(theta))},
                                       0, 0});
        }
        return out;
    };
    sc.residual_lambdas = {v2(1.0, 0.0), v2(0.5, -1.0), v2(2.0, 1.0)};
    sc.transfer_lambdas = sc.residual_lambdas;

    sc.notes = "Free flight in the disk of radius R with specular reflection at the rim. "
               "Constant one-forms solve the stationary equation exactly, so every residual "
               "channel sits at roundoff.";
    return sc;
}

} // namespace hybridhj::scenarios
