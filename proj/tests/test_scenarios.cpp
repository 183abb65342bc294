// Scenario registry: shipped families solve their stationary equations,
// closed-form oracles track the hybrid flow, transfer maps match the impact
// bookkeeping, and parameter validation rejects bad input.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "hybridhj/model.hpp"
#include "hybridhj/scenarios.hpp"
#include "hybridhj/verify.hpp"

using namespace hybridhj;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Vec v3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

ResidualReport run_residual(const scenarios::Scenario& sc, const Vec& lambda,
                            const std::vector<BasePoint>& samples) {
    switch (sc.system.kind) {
    case FieldKind::forced:
        return residual_forced(sc.system.model, sc.family, 0, lambda, samples);
    case FieldKind::nonholonomic:
        return residual_nonholonomic(sc.system.model, sc.family, 0, lambda, samples);
    default:
        return residual_conservative(sc.system.model, sc.family, 0, lambda, samples);
    }
}

} // namespace

TEST_CASE("registry contents and parameter validation") {
    const auto descriptors = scenarios::scenario_descriptors();
    REQUIRE(descriptors.size() == 5);
    std::set<std::string> names;
    for (const auto& d : descriptors) {
        CHECK_FALSE(d.name.empty());
        CHECK_FALSE(d.doc.empty());
        names.insert(d.name);
    }
    const std::set<std::string> expected{"billiard", "rolling_disk", "rolling_disk_forced",
                                         "nh_particle", "rigid_body"};
    CHECK(names == expected);

    CHECK_THROWS_AS(scenarios::make_scenario("pendulum"), ConfigError);
    CHECK_THROWS_AS(scenarios::make_scenario("billiard", {{"gravity", 9.8}}), ConfigError);
    CHECK_THROWS_AS(scenarios::make_scenario("billiard", {{"m", -1.0}}), BadParameters);
    CHECK_THROWS_AS(scenarios::make_scenario("rolling_disk", {{"alpha", 1.0}}), BadParameters);
    CHECK_THROWS_AS(scenarios::make_scenario("rolling_disk", {{"e", 1.5}}), BadParameters);
    CHECK_THROWS_AS(scenarios::make_scenario("rigid_body", {{"I22", 0.0}}), BadParameters);
    CHECK_THROWS_AS(scenarios::make_scenario("rigid_body", {{"mu2", 0.0}, {"mu3", 0.0}}),
                    BadParameters);
}

TEST_CASE("every shipped family solves its stationary equation") {
    for (const auto& name :
         {"billiard", "rolling_disk", "rolling_disk_forced", "nh_particle", "rigid_body"}) {
        const auto sc = scenarios::make_scenario(name);
        const auto samples = sc.sample_interior(1000);
        REQUIRE(samples.size() == 1000);
        REQUIRE_FALSE(sc.residual_lambdas.empty());
        for (const Vec& lam : sc.residual_lambdas) {
            const ResidualReport rep = run_residual(sc, lam, samples);
            INFO(name << " lambda " << lam.transpose());
            CHECK(rep.analytic_jacobians);
            CHECK(rep.max_residual <= 1e-10);
            CHECK(rep.passes());
        }
    }
}

TEST_CASE("scenario samplers are deterministic and honor regions") {
    for (const auto& name :
         {"billiard", "rolling_disk", "rolling_disk_forced", "nh_particle", "rigid_body"}) {
        const auto sc = scenarios::make_scenario(name);
        const auto a = sc.sample_interior(100);
        const auto b = sc.sample_interior(100);
        REQUIRE(a.size() == 100);
        REQUIRE(b.size() == 100);
        const auto& region = sc.family.regions[0];
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK((a[i].q - b[i].q).cwiseAbs().maxCoeff() == 0.0);
            CHECK(region.contains(a[i]));
        }
        const auto impacts = sc.sample_impacts(20);
        REQUIRE(impacts.size() == 20);
        for (const auto& s : impacts) {
            if (std::string(name) == "billiard") {
                CHECK(std::abs(s.q.q.norm() - sc.params.at("R")) <= 1e-12);
            } else if (std::string(name).rfind("rolling_disk", 0) == 0) {
                const double R = sc.params.at("R");
                const double top = sc.params.at("alpha") * R - R;
                const double gap = std::min(std::abs(s.q.q(1) - R), std::abs(s.q.q(1) - top));
                CHECK(gap <= 1e-12);
            } else if (std::string(name) == "nh_particle") {
                const double gap =
                    std::min(std::abs(s.q.q(1)), std::abs(s.q.q(1) - sc.params.at("a")));
                CHECK(gap <= 1e-12);
            } else {
                CHECK(std::abs(s.q.q(0)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("billiard closed form tracks ten reflections") {
    const auto sc = scenarios::make_scenario("billiard");
    SimulationPolicy policy;
    const HybridTrajectory run = simulate_hybrid(sc.system, sc.default_x0, 19.5, policy);
    const scenarios::Oracle oracle = sc.make_oracle(sc.default_x0, 19.5);

    REQUIRE(run.events.size() == 10);
    REQUIRE(oracle.impact_times.size() == 10);
    for (std::size_t i = 0; i < run.events.size(); ++i) {
        CHECK(std::abs(run.events[i].t - oracle.impact_times[i]) <= 1e-8);
    }
    double sup = 0.0;
    for (double t = 0.0007; t < 19.5; t += 0.013) {
        const PhasePoint a = run.at(t);
        const PhasePoint b = oracle.at(t);
        sup = std::max(sup, (a.q - b.q).cwiseAbs().maxCoeff());
        sup = std::max(sup, (a.p - b.p).cwiseAbs().maxCoeff());
    }
    CHECK(sup <= 1e-6);

    // Conserved and non-conserved observables across impacts.
    for (const auto& [label, fn] : sc.hybrid_constants) {
        INFO(label);
        CHECK(check_hybrid_constant(fn, run).max_drift <= 1e-9);
    }
    CHECK(check_hybrid_constant(sc.non_constants[0].second, run).max_drift > 0.1);
}

TEST_CASE("billiard wall reflection examples") {
    const auto sc = scenarios::make_scenario("billiard");
    const auto reflect = [&](const Vec& q, const Vec& p) {
        return sc.system.reset.delta(PhasePoint{q, p}).p;
    };
    CHECK((reflect(v2(1.0, 0.0), v2(1.0, 0.0)) - v2(-1.0, 0.0)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((reflect(v2(1.0, 0.0), v2(0.0, 1.0)) - v2(0.0, 1.0)).cwiseAbs().maxCoeff() <= 1e-15);
    const double r = std::sqrt(0.5);
    CHECK((reflect(v2(r, r), v2(1.0, 1.0)) - v2(-1.0, -1.0)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("disk transfer is the contact average plus the restitution flip") {
    const BasePoint contact{v3(0.3, 1.0, 2.0)};
    SECTION("default restitution") {
        const auto sc = scenarios::make_scenario("rolling_disk");
        const Vec out = sc.transfer.tau(0, 0, contact, v3(1.0, -0.7, 1.0));
        CHECK(std::abs(out(0) - 1.0) <= 1e-15);
        CHECK(std::abs(out(1) - 0.56) <= 1e-15);
        CHECK(std::abs(out(2) - 1.0) <= 1e-15);
    }
    SECTION("elastic wall negates the vertical parameter") {
        const auto sc = scenarios::make_scenario("rolling_disk", {{"e", 1.0}});
        const Vec out = sc.transfer.tau(0, 0, contact, v3(0.2, -0.7, 0.4));
        CHECK(std::abs(out(1) + (-0.7)) <= 1e-15);
        CHECK(std::abs(out(0) - 0.3) <= 1e-15);
        CHECK(std::abs(out(2) - 0.3) <= 1e-15);
    }
}

TEST_CASE("disk energy bookkeeping across impacts") {
    SimulationPolicy policy;
    SECTION("elastic impacts conserve the energy") {
        const auto sc = scenarios::make_scenario("rolling_disk", {{"e", 1.0}});
        const HybridTrajectory run = simulate_hybrid(sc.system, sc.default_x0, 16.0, policy);
        REQUIRE(run.events.size() >= 9);
        CHECK(check_hybrid_constant(sc.system.model.H, run).max_drift <= 1e-9);
        CHECK(check_hybrid_constant(sc.hybrid_constants[0].second, run).max_drift <= 1e-9);
        CHECK(check_hybrid_constant(sc.non_constants[0].second, run).max_drift > 0.1);
    }
    SECTION("each impact dissipates the vertical kinetic term") {
        const auto sc = scenarios::make_scenario("rolling_disk");
        const double e = sc.params.at("e");
        const double m = sc.params.at("m");
        const HybridTrajectory run =
            simulate_hybrid(sc.system, sc.default_x0, sc.default_horizon, policy);
        REQUIRE(run.events.size() == 3);
        for (const ImpactEvent& ev : run.events) {
            const double dH = sc.system.model.H(ev.x_plus) - sc.system.model.H(ev.x_minus);
            const double expected =
                (e * e - 1.0) * ev.x_minus.p(1) * ev.x_minus.p(1) / (2.0 * m);
            CHECK(std::abs(dH - expected) <= 1e-12);
        }
    }
}

TEST_CASE("forced disk alternative transfer misses by the contact height gap") {
    const auto sc = scenarios::make_scenario("rolling_disk_forced");
    const auto impacts = sc.sample_impacts(50);
    REQUIRE(sc.alternative_transfer.has_value());

    const ResidualReport good =
        delta_relatedness_check(sc.system, sc.family, sc.transfer, impacts, sc.transfer_lambdas);
    CHECK(good.max_residual <= 1e-12);
    CHECK(good.passes());

    const ResidualReport bad = delta_relatedness_check(sc.system, sc.family,
                                                       *sc.alternative_transfer, impacts,
                                                       sc.transfer_lambdas);
    const double gap = (1.0 + sc.params.at("e")) * sc.params.at("family_slope") * sc.params.at("R");
    CHECK(std::abs(bad.max_residual - gap) <= 1e-12);
    CHECK_FALSE(bad.passes());
}

TEST_CASE("constrained particle stays on the constraint through impacts") {
    const auto sc = scenarios::make_scenario("nh_particle");
    SimulationPolicy policy;
    const HybridTrajectory run = simulate_hybrid(sc.system, sc.default_x0, 2.5, policy);
    const scenarios::Oracle oracle = sc.make_oracle(sc.default_x0, 2.5);

    REQUIRE(run.events.size() == 2);
    REQUIRE(oracle.impact_times.size() == 2);
    CHECK(std::abs(run.events[0].t - oracle.impact_times[0]) <= 1e-8);
    CHECK(std::abs(run.events[1].t - oracle.impact_times[1]) <= 1e-8);

    double sup = 0.0;
    double worst_membership = 0.0;
    for (double t = 0.0007; t < 2.5; t += 0.013) {
        const PhasePoint a = run.at(t);
        const PhasePoint b = oracle.at(t);
        sup = std::max(sup, (a.q - b.q).cwiseAbs().maxCoeff());
        sup = std::max(sup, (a.p - b.p).cwiseAbs().maxCoeff());
        worst_membership =
            std::max(worst_membership, is_on_constraint(sc.system.model, a).residual);
    }
    CHECK(sup <= 1e-8);
    CHECK(worst_membership <= 1e-8);
}

TEST_CASE("vertical-rest branch of the constrained particle moves linearly") {
    const auto sc = scenarios::make_scenario("nh_particle");
    const double r = std::sqrt(1.25);
    const PhasePoint x0{v3(0.0, 0.5, 0.0), v3(1.0 / r, 0.0, 0.5 / r)};
    SimulationPolicy policy;
    const HybridTrajectory run = simulate_hybrid(sc.system, x0, 1.0, policy);
    const scenarios::Oracle oracle = sc.make_oracle(x0, 1.0);

    CHECK(run.events.empty());
    CHECK(oracle.impact_times.empty());
    const PhasePoint end = run.at(1.0);
    CHECK(end.q(1) == 0.5);
    CHECK(std::abs(end.q(0) - 1.0 / r) <= 1e-12);
    CHECK(std::abs(end.q(2) - 0.5 / r) <= 1e-12);
    const PhasePoint ref = oracle.at(1.0);
    CHECK((end.q - ref.q).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((end.p - ref.p).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("constrained particle alternative energy update fails relatedness") {
    const auto sc = scenarios::make_scenario("nh_particle");
    REQUIRE(sc.alternative_transfer.has_value());
    const ResidualReport bad =
        delta_relatedness_check(sc.system, sc.family, *sc.alternative_transfer,
                                sc.sample_impacts(30), sc.transfer_lambdas);
    CHECK(bad.max_residual > 1e-3);
    CHECK_FALSE(bad.passes());
}

TEST_CASE("rigid body momenta are piecewise constant with a partial reset") {
    const auto sc = scenarios::make_scenario(
        "rigid_body", {{"mu1", 0.0}, {"mu2", 1.0}, {"mu3", 1.0}, {"epsilon", 0.5}});
    const PhasePoint x0{v3(0.3, 0.4, 0.0), v3(-0.8, 1.0, -1.5)};
    SimulationPolicy policy;
    const HybridTrajectory run = simulate_hybrid(sc.system, x0, 0.5, policy);

    REQUIRE(run.events.size() == 1);
    const ImpactEvent& ev = run.events[0];
    CHECK(ev.x_plus.p(0) == 0.5 * ev.x_minus.p(0));
    CHECK(ev.x_plus.p(1) == ev.x_minus.p(1));
    CHECK(ev.x_plus.p(2) == ev.x_minus.p(2));
    for (const TrajectorySegment& seg : run.segments) {
        const Vec& p0 = seg.x.front().p;
        for (const PhasePoint& x : seg.x) {
            CHECK((x.p - p0).cwiseAbs().maxCoeff() <= 1e-14);
        }
    }
}

TEST_CASE("rigid body run terminates cleanly at the chart boundary") {
    // Starts a hair below the chart margin with the tilt angle still rising,
    // so the first step's stage evaluations cross the excluded band.
    const auto sc = scenarios::make_scenario("rigid_body");
    const PhasePoint x0{v3(1.0, 1.5697, 0.0), v3(0.0, 1.0, -1.5)};
    SimulationPolicy policy;
    const HybridTrajectory run = simulate_hybrid(sc.system, x0, 1.0, policy);
    CHECK(run.termination == Termination::error);
    CHECK_FALSE(run.termination_detail.empty());
    CHECK(run.events.empty());
    CHECK(run.t_end() < 1.0);
}
