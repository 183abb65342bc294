#include "scenarios_common.hpp"

#include <cmath>

namespace hybridhj::scenarios {

using detail::box;
using detail::merge_params;
using detail::v3;

namespace {

struct RigidData {
    double I11, I22, I33;
    double mu1, mu2, mu3;
    double eps;
    double mu_bar_sq;  // mu2^2 + mu3^2
    double mu_sum_sq;  // mu1^2 + mu2^2 + mu3^2
};

// Second family coordinate at (lambda1, E, s): the root of the energy and
// membership conditions. Throws when the requested level set is empty.
double lambda2_of(const RigidData& d, const Vec& lambda) {
    const double l1 = lambda(0);
    const double E = lambda(1);
    const double s = lambda(2) >= 0.0 ? 1.0 : -1.0;
    const double rad =
        2.0 * E * d.mu_bar_sq - l1 * l1 * d.mu_sum_sq / (d.I11 * d.I11);
    if (rad < 0.0) {
        throw BadParameters("rigid_body family requires 2 E (mu2^2+mu3^2) >= "
                            "lambda1^2 (mu1^2+mu2^2+mu3^2) / I11^2");
    }
    return s * std::sqrt(rad);
}

Covector rigid_gamma(const RigidData& d, const Vec& lambda) {
    const double l1 = lambda(0);
    const double l2 = lambda2_of(d, lambda);
    const double c = -d.mu1 * l1 / d.I11;
    const double u = (c * d.mu2 + d.mu3 * l2) / d.mu_bar_sq;
    const double v = (c * d.mu3 - d.mu2 * l2) / d.mu_bar_sq;
    return detail::v3(l1, d.I22 * u, d.I33 * v);
}

} // namespace

Scenario rigid_body_so3(const std::map<std::string, double>& overrides) {
    auto params = merge_params({{"I11", 1.0},
                                {"I22", 2.0},
                                {"I33", 3.0},
                                {"mu1", 1.0},
                                {"mu2", 1.0},
                                {"mu3", 1.0},
                                {"epsilon", 0.9}},
                               overrides, "rigid_body");
    RigidData d{};
    d.I11 = params.at("I11");
    d.I22 = params.at("I22");
    d.I33 = params.at("I33");
    d.mu1 = params.at("mu1");
    d.mu2 = params.at("mu2");
    d.mu3 = params.at("mu3");
    d.eps = params.at("epsilon");
    if (!(d.I11 > 0.0 && d.I22 > 0.0 && d.I33 > 0.0)) {
        throw BadParameters("rigid_body: inertia entries must be positive");
    }
    d.mu_bar_sq = d.mu2 * d.mu2 + d.mu3 * d.mu3;
    d.mu_sum_sq = d.mu1 * d.mu1 + d.mu_bar_sq;
    if (!(d.mu_bar_sq > 0.0)) {
        throw BadParameters("rigid_body: mu2 and mu3 must not both vanish");
    }
    const double margin = Tolerances{}.chart_margin;

    Scenario sc;
    sc.name = "rigid_body";
    sc.params = params;
    sc.coord_names = {"alpha", "beta", "phi"};

    DynamicsModel model;
    model.n = 3;
    model.H = [d](const PhasePoint& x) {
        const double w1 = x.p(0) / d.I11;
        const double w2 = x.p(1) / d.I22;
        const double w3 = x.p(2) / d.I33;
        return 0.5 * (w1 * w1 + w2 * w2 + w3 * w3);
    };
    model.dH_dq = [](const PhasePoint&) { return Vec(Vec::Zero(3)); };
    model.dH_dp = [d](const PhasePoint& x) {
        return Vec(v3(x.p(0) / (d.I11 * d.I11), x.p(1) / (d.I22 * d.I22),
                      x.p(2) / (d.I33 * d.I33)));
    };
    model.mass_matrix = [d](const BasePoint&) {
        Mat g = Mat::Zero(3, 3);
        g(0, 0) = d.I11;
        g(1, 1) = d.I22;
        g(2, 2) = d.I33;
        return g;
    };
    ConstraintSet cs;
    cs.k = 1;
    cs.mu = [d](const BasePoint&) {
        Mat mu(1, 3);
        mu << d.mu1, d.mu2, d.mu3;
        return mu;
    };
    cs.mu_jacobian = [](const BasePoint&) { return std::vector<Mat>(3, Mat::Zero(1, 3)); };
    model.constraints = cs;

    // Body momenta are carried as fiber coordinates and stay constant along
    // the continuous flow; the chart angles evolve by the kinematic
    // reconstruction map driven by the body angular velocity.
    model.flow = [d, margin](const PhasePoint& x, Vec& qdot, Vec& pdot) {
        const double alpha = x.q(0);
        const double beta = x.q(1);
        if (std::abs(beta) >= M_PI / 2.0 - margin) {
            throw ChartSingularity("rigid_body chart leaves |beta| < pi/2 - margin");
        }
        const double xi1 = x.p(0) / d.I11;
        const double xi2 = x.p(1) / d.I22;
        const double xi3 = x.p(2) / d.I33;
        const double sa = std::sin(alpha);
        const double ca = std::cos(alpha);
        const double cb = std::cos(beta);
        const double tb = std::tan(beta);
        const double cross = xi2 * sa + xi3 * ca;
        qdot = v3(xi1 + tb * cross, xi2 * ca - xi3 * sa, cross / cb);
        pdot = Vec::Zero(3);
    };

    GuardSpec section;
    section.id = 0;
    section.direction = GuardDirection::decreasing;
    section.g = [](const PhasePoint& x) { return x.q(0); };

    ResetMap reset;
    reset.delta = [d](const PhasePoint& x) {
        return PhasePoint{x.q, v3(d.eps * x.p(0), x.p(1), x.p(2))};
    };

    sc.system = HybridSystemSpec{model, FieldKind::custom, {section}, reset};

    SolutionFamily fam;
    fam.param_dim = 2;
    fam.regions = {Region{0, [margin](const BasePoint& q) {
                              return std::abs(q.q(1)) < M_PI / 2.0 - margin;
                          }}};
    fam.gamma = [d](int, const BasePoint&, const Vec& lambda) { return rigid_gamma(d, lambda); };
    fam.dgamma_dq = [](int, const BasePoint&, const Vec&) { return Mat(Mat::Zero(3, 3)); };
    fam.dgamma_dlambda = [d](int, const BasePoint&, const Vec& lambda) {
        const double l1 = lambda(0);
        const double l2 = lambda2_of(d, lambda);
        if (l2 == 0.0) {
            throw BadParameters("rigid_body family Jacobian undefined at lambda2 = 0");
        }
        // dl2/dl1 and dl2/dE from the radical; chain rule through u and v.
        const double dl2_dl1 = -l1 * d.mu_sum_sq / (d.I11 * d.I11 * l2);
        const double dl2_dE = d.mu_bar_sq / l2;
        const double dc_dl1 = -d.mu1 / d.I11;
        Mat J(3, 2);
        J(0, 0) = 1.0;
        J(0, 1) = 0.0;
        J(1, 0) = d.I22 * (dc_dl1 * d.mu2 + d.mu3 * dl2_dl1) / d.mu_bar_sq;
        J(1, 1) = d.I22 * (d.mu3 * dl2_dE) / d.mu_bar_sq;
        J(2, 0) = d.I33 * (dc_dl1 * d.mu3 - d.mu2 * dl2_dl1) / d.mu_bar_sq;
        J(2, 1) = d.I33 * (-d.mu2 * dl2_dE) / d.mu_bar_sq;
        return J;
    };
    sc.family = fam;

    // The matching equations are solvable only when mu3 = +-mu2 or eps = 1.
    sc.transfer.tau = [d](int, int, const BasePoint&, const Vec& lambda) {
        if (d.eps == 1.0) return lambda;
        const double l1 = lambda(0);
        const double l2 = lambda2_of(d, lambda);
        double l2_next;
        if (d.mu3 == d.mu2) {
            l2_next = l2 + (d.eps - 1.0) * (d.mu1 / d.I11) * l1;
        } else if (d.mu3 == -d.mu2) {
            l2_next = l2 - (d.eps - 1.0) * (d.mu1 / d.I11) * l1;
        } else {
            throw TransferUndefined(
                "rigid_body transfer requires mu3 = +-mu2 or epsilon = 1");
        }
        const double l1_next = d.eps * l1;
        const double E_next = (l2_next * l2_next +
                               l1_next * l1_next * d.mu_sum_sq / (d.I11 * d.I11)) /
                              (2.0 * d.mu_bar_sq);
        return Vec(v3(l1_next, E_next, l2_next >= 0.0 ? 1.0 : -1.0));
    };

    sc.default_x0 = PhasePoint{v3(0.15, 0.4, 0.0), v3(0.0, 1.0, -1.5)};
    sc.default_horizon = 1.2;
    sc.default_lambda0 = v3(0.0, 0.25, 1.0);
    sc.default_region0 = 0;

    sc.hybrid_constants = {
        {"H", model.H},
        {"constraint",
         [d](const PhasePoint& x) {
             return d.mu1 * x.p(0) / d.I11 + d.mu2 * x.p(1) / d.I22 + d.mu3 * x.p(2) / d.I33;
         }},
    };
    sc.non_constants = {
        {"alpha", [](const PhasePoint& x) { return x.q(0); }},
        {"beta", [](const PhasePoint& x) { return x.q(1); }},
    };

    sc.sample_interior = [](int count) {
        std::vector<BasePoint> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            out.push_back(BasePoint{v3(box(halton(idx, 2), -1.0, 1.0),
                                       box(halton(idx, 3), -1.2, 1.2),
                                       box(halton(idx, 5), -M_PI, M_PI))});
        }
        return out;
    };
    sc.sample_impacts = [](int count) {
        std::vector<ImpactSample> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            out.push_back(ImpactSample{BasePoint{v3(0.0, box(halton(idx, 2), -1.2, 1.2),
                                                    box(halton(idx, 3), -M_PI, M_PI))},
                                       0, 0});
        }
        return out;
    };

    // Candidate parameter tuples, kept only where the level set is nonempty
    // for the constructed mu and inertia values.
    const auto admits = [d](const Vec& lambda) {
        const double l1 = lambda(0);
        const double E = lambda(1);
        return 2.0 * E * d.mu_bar_sq - l1 * l1 * d.mu_sum_sq / (d.I11 * d.I11) > 1e-6;
    };
    for (const Vec& cand : {v3(0.0, 0.25, 1.0), v3(0.0, 0.5, -1.0), v3(0.2, 0.5, 1.0),
                            v3(-0.3, 1.0, -1.0)}) {
        if (admits(cand)) sc.residual_lambdas.push_back(cand);
    }
    // With eps != 1 exact relatedness holds only on the lambda1 = 0 slice of
    // the family; the shipped transfer grid restricts to it in that case.
    if (d.eps == 1.0) {
        sc.transfer_lambdas = sc.residual_lambdas;
    } else {
        for (const Vec& cand : {v3(0.0, 0.25, 1.0), v3(0.0, 0.5, -1.0), v3(0.0, 1.0, 1.0)}) {
            if (admits(cand)) sc.transfer_lambdas.push_back(cand);
        }
    }

    sc.notes = "Generalized rigid body in an Euler-angle chart with a single left-invariant "
               "momentum constraint; impacts at alpha = 0 scale the first body momentum by "
               "epsilon. Parameter transfer exists only for mu3 = +-mu2 or epsilon = 1, and "
               "with epsilon != 1 exact relatedness additionally requires lambda1 = 0, so the "
               "shipped transfer grid restricts to that slice.";
    return sc;
}

} // namespace hybridhj::scenarios
