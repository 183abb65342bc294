#include "scenarios_common.hpp"

#include <cmath>
#include <limits>

namespace hybridhj::scenarios {

using detail::box;
using detail::merge_params;
using detail::v3;

Scenario rolling_disk(bool forced, const std::map<std::string, double>& overrides) {
    std::map<std::string, double> defaults{
        {"m", 1.0}, {"k", 1.0}, {"R", 1.0}, {"e", 0.8}, {"alpha", 3.0}};
    if (forced) {
        defaults.emplace("B", 0.1);
        // NaN sentinel: keep the family slope tied to B*m unless overridden.
        defaults.emplace("family_slope", std::numeric_limits<double>::quiet_NaN());
    }
    const std::string name = forced ? "rolling_disk_forced" : "rolling_disk";
    auto params = merge_params(defaults, overrides, name);
    const double m = params.at("m");
    const double k = params.at("k");
    const double R = params.at("R");
    const double e = params.at("e");
    const double alpha = params.at("alpha");
    const double B = forced ? params.at("B") : 0.0;
    const double slope =
        forced && !std::isnan(params.at("family_slope")) ? params.at("family_slope") : B * m;
    if (forced) params["family_slope"] = slope;
    if (!(m > 0.0) || !(k > 0.0) || !(R > 0.0)) {
        throw BadParameters(name + ": m, k, R must be positive");
    }
    if (!(alpha > 1.0)) throw BadParameters(name + ": alpha must exceed 1");
    if (!(e >= 0.0 && e <= 1.0)) throw BadParameters(name + ": e must lie in [0, 1]");
    const double h = alpha * R;
    const double adm_tol = Tolerances{}.adm_tol;

    Scenario sc;
    sc.name = name;
    sc.params = params;
    sc.coord_names = {"x", "y", "theta"};

    DynamicsModel model;
    model.n = 3;
    model.H = [m, k](const PhasePoint& x) {
        return (x.p(0) * x.p(0) + x.p(1) * x.p(1)) / (2.0 * m) +
               x.p(2) * x.p(2) / (2.0 * m * k * k);
    };
    model.dH_dq = [](const PhasePoint&) { return Vec(Vec::Zero(3)); };
    model.dH_dp = [m, k](const PhasePoint& x) {
        return Vec(v3(x.p(0) / m, x.p(1) / m, x.p(2) / (m * k * k)));
    };
    model.mass_matrix = [m, k](const BasePoint&) {
        Mat g = Mat::Zero(3, 3);
        g(0, 0) = m;
        g(1, 1) = m;
        g(2, 2) = m * k * k;
        return g;
    };
    if (forced) {
        // Written so the sloped family solves the forced stationary equation;
        // the vertical momentum then grows by the factor exp(B t) in flight.
        model.force = SemibasicForce{[B](const PhasePoint& x) {
            return Vec(v3(0.0, -B * x.p(1), 0.0));
        }};
    }

    const auto admissible = [R, k, adm_tol](const PhasePoint& x) {
        return std::abs(x.p(0) - R * x.p(2) / (k * k)) <= adm_tol;
    };

    GuardSpec floor;
    floor.id = 0;
    floor.direction = GuardDirection::decreasing;
    floor.g = [R](const PhasePoint& x) { return x.q(1) - R; };
    floor.admissibility = admissible;
    GuardSpec ceiling;
    ceiling.id = 1;
    ceiling.direction = GuardDirection::decreasing;
    ceiling.g = [h, R](const PhasePoint& x) { return (h - R) - x.q(1); };
    ceiling.admissibility = admissible;

    // Contact averaging of the translational and rotational momenta plus the
    // restitution flip of the vertical momentum.
    const auto reset_p = [R, k, e](const Vec& p) {
        const double den = k * k + R * R;
        return v3((R * R * p(0) + k * k * R * p(2)) / den, -e * p(1),
                  (R * p(0) + k * k * p(2)) / den);
    };

    ResetMap reset;
    reset.delta = [reset_p](const PhasePoint& x) { return PhasePoint{x.q, reset_p(x.p)}; };

    sc.system = HybridSystemSpec{model, forced ? FieldKind::forced : FieldKind::hamiltonian,
                                 {floor, ceiling}, reset};

    SolutionFamily fam;
    fam.param_dim = 3;
    fam.regions = {Region{0, [R, h](const BasePoint& q) {
                              return q.q(1) > R && q.q(1) < h - R;
                          }}};
    fam.gamma = [slope](int, const BasePoint& q, const Vec& lambda) {
        return Covector(v3(lambda(0), slope * q.q(1) + lambda(1), lambda(2)));
    };
    fam.dgamma_dq = [slope](int, const BasePoint&, const Vec&) {
        Mat J = Mat::Zero(3, 3);
        J(1, 1) = slope;
        return J;
    };
    fam.dgamma_dlambda = [](int, const BasePoint&, const Vec&) {
        return Mat(Mat::Identity(3, 3));
    };
    sc.family = fam;

    // The slope term is evaluated at the actual contact height carried by q,
    // so the transferred form matches the reset image on both walls.
    sc.transfer.tau = [reset_p, slope](int, int, const BasePoint& q, const Vec& lambda) {
        const double y_wall = q.q(1);
        const Vec p_minus = v3(lambda(0), slope * y_wall + lambda(1), lambda(2));
        const Vec p_plus = reset_p(p_minus);
        return Vec(v3(p_plus(0), p_plus(1) - slope * y_wall, p_plus(2)));
    };
    if (forced) {
        // Alternative convention: the slope is evaluated at the wall
        // coordinates 0 and h instead of the contact heights R and h-R.
        sc.alternative_transfer = TransferMap{
            [reset_p, slope, e, h, R](int, int, const BasePoint& q, const Vec& lambda) {
                const double y_wall = q.q(1) > R ? h : 0.0;
                Vec out = lambda;
                const Vec avg = reset_p(v3(lambda(0), 0.0, lambda(2)));
                out(0) = avg(0);
                out(2) = avg(2);
                out(1) = -(e + 1.0) * slope * y_wall - e * lambda(1);
                return out;
            }};
    }

    sc.make_oracle = [m, k, R, h, e, B, reset_p, adm_tol](const PhasePoint& x0, double horizon) {
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
            const double target = py < 0.0 ? R : h - R;
            double dt;
            double py_hit;
            if (B == 0.0) {
                dt = (target - q(1)) / (py / m);
                py_hit = py;
            } else {
                const double arg = 1.0 + B * m * (target - q(1)) / py;
                if (!(arg > 0.0)) break;
                dt = std::log(arg) / B;
                py_hit = py * arg;
            }
            if (!(dt > 0.0) || t + dt > horizon) break;
            t += dt;
            Vec q_hit = v3(q(0) + p(0) / m * dt, target, q(2) + p(2) / (m * k * k) * dt);
            Vec p_hit = v3(p(0), py_hit, p(2));
            if (std::abs(p_hit(0) - R * p_hit(2) / (k * k)) > adm_tol) {
                // Inadmissible contact: the crossing is ignored and the flow
                // leaves the strip with no further impacts.
                break;
            }
            q = q_hit;
            p = reset_p(p_hit);
            nodes.push_back({t, q, p});
            oracle.impact_times.push_back(t);
        }
        oracle.at = [m, k, B, nodes](double t_eval) {
            std::size_t i = nodes.size() - 1;
            while (i > 0 && nodes[i].t > t_eval) --i;
            const Node& nd = nodes[i];
            const double dt = t_eval - nd.t;
            double y;
            double py;
            if (B == 0.0) {
                y = nd.q(1) + nd.p(1) / m * dt;
                py = nd.p(1);
            } else {
                const double grow = std::exp(B * dt);
                y = nd.q(1) + nd.p(1) * (grow - 1.0) / (B * m);
                py = nd.p(1) * grow;
            }
            return PhasePoint{
                v3(nd.q(0) + nd.p(0) / m * dt, y, nd.q(2) + nd.p(2) / (m * k * k) * dt),
                v3(nd.p(0), py, nd.p(2))};
        };
        return oracle;
    };

    sc.default_x0 = PhasePoint{v3(0.0, 1.5, 0.0), v3(1.0, -0.6, 1.0)};
    sc.default_horizon = forced ? 5.0 : 6.0;
    sc.default_lambda0 = forced ? v3(1.0, -0.75, 1.0) : v3(1.0, -0.6, 1.0);
    sc.default_region0 = 0;

    sc.hybrid_constants = {
        {"roll_momentum",
         [R, k](const PhasePoint& x) { return R * x.p(0) + k * k * x.p(2); }},
    };
    sc.non_constants = {
        {"p_y", [](const PhasePoint& x) { return x.p(1); }},
        {"H", model.H},
    };

    sc.sample_interior = [R, h](int count) {
        std::vector<BasePoint> out;
        out.reserve(static_cast<std::size_t>(count));
        const double inset = 0.05 * (h - 2.0 * R);
        for (int i = 0; i < count; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            out.push_back(BasePoint{v3(box(halton(idx, 2), -2.0, 2.0),
                                       box(halton(idx, 3), R + inset, h - R - inset),
                                       box(halton(idx, 5), -M_PI, M_PI))});
        }
        return out;
    };
    sc.sample_impacts = [R, h](int count) {
        std::vector<ImpactSample> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const double y = (i % 2 == 0) ? R : h - R;
            out.push_back(ImpactSample{BasePoint{v3(box(halton(idx, 2), -2.0, 2.0), y,
                                                    box(halton(idx, 3), -M_PI, M_PI))},
                                       0, 0});
        }
        return out;
    };
    sc.residual_lambdas = {v3(1.0, -0.6, 1.0), v3(0.5, 0.3, 0.5), v3(2.0, -1.0, 2.0)};
    sc.transfer_lambdas = sc.residual_lambdas;

    sc.notes = forced ? "Vertically rolling disk between walls with a vertical force linear in "
                        "the vertical momentum. Both walls gate on the rolling-contact "
                        "condition; an inadmissible contact is skipped and the flow continues "
                        "through the surface. The alternative transfer evaluates the slope at "
                        "the wall coordinates 0 and h instead of the contact heights."
                      : "Vertically rolling disk bouncing between two walls. The contact "
                        "averaging of the translational and rotational momenta keeps "
                        "R p_x + k^2 p_theta a hybrid constant.";
    return sc;
}

} // namespace hybridhj::scenarios
