// Event-driven hybrid execution: reflection sequences, segment bookkeeping,
// conserved quantities across impacts, Zeno termination, determinism, and
// event-time convergence order.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hybridhj/hybrid.hpp"
#include "hybridhj/scenarios.hpp"

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

// Ball under unit gravity over a floor at y = 0 with restitution e: the
// classic accumulation-point sequence used to exercise the Zeno guard.
HybridSystemSpec bouncer(double e) {
    DynamicsModel m;
    m.n = 1;
    m.H = [](const PhasePoint& x) { return 0.5 * x.p(0) * x.p(0) + x.q(0); };
    m.dH_dq = [](const PhasePoint& x) { return Vec(Vec::Ones(x.q.size())); };
    m.dH_dp = [](const PhasePoint& x) { return Vec(x.p); };

    GuardSpec floor;
    floor.id = 0;
    floor.direction = GuardDirection::decreasing;
    floor.g = [](const PhasePoint& x) { return x.q(0); };

    ResetMap reset;
    reset.delta = [e](const PhasePoint& x) {
        Vec p(1);
        p << -e * x.p(0);
        return PhasePoint{x.q, p};
    };
    return HybridSystemSpec{m, FieldKind::hamiltonian, {floor}, reset};
}

} // namespace

TEST_CASE("bounded plane flow reflects at the walls") {
    const auto sc = scenarios::make_scenario("billiard");
    SimulationPolicy policy;
    const HybridTrajectory traj =
        simulate_hybrid(sc.system, PhasePoint{v2(0.0, 0.0), v2(1.0, 0.0)}, 3.5, policy);

    CHECK(traj.termination == Termination::horizon_reached);
    REQUIRE(traj.events.size() == 2);
    REQUIRE(traj.segments.size() == 3);
    CHECK(std::abs(traj.events[0].t - 1.0) <= 1e-10);
    CHECK(std::abs(traj.events[1].t - 3.0) <= 1e-10);

    const ImpactEvent& e0 = traj.events[0];
    CHECK((e0.x_minus.q - v2(1.0, 0.0)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((e0.x_minus.p - v2(1.0, 0.0)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((e0.x_plus.p - v2(-1.0, 0.0)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((traj.events[1].x_minus.q - v2(-1.0, 0.0)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((traj.events[1].x_plus.p - v2(1.0, 0.0)).cwiseAbs().maxCoeff() <= 1e-10);

    // Segment bookkeeping: each new segment starts at the impact time with
    // the post-impact state, and the trajectory value at an impact time
    // follows the post-impact convention.
    for (std::size_t i = 0; i < traj.events.size(); ++i) {
        const TrajectorySegment& next = traj.segments[i + 1];
        CHECK(next.t.front() == traj.events[i].t);
        CHECK((next.x.front().q - traj.events[i].x_plus.q).cwiseAbs().maxCoeff() == 0.0);
        CHECK((next.x.front().p - traj.events[i].x_plus.p).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(traj.at(traj.events[0].t).p(0) == traj.events[0].x_plus.p(0));
    CHECK(std::abs(traj.at(0.5).q(0) - 0.5) <= 1e-12);
    CHECK(traj.t_end() == 3.5);
}

TEST_CASE("restitution scales the vertical momentum at each contact") {
    SimulationPolicy policy;
    const auto elastic = scenarios::make_scenario("rolling_disk", {{"e", 1.0}});
    const HybridTrajectory te =
        simulate_hybrid(elastic.system, elastic.default_x0, 6.0, policy);
    REQUIRE(te.events.size() >= 2);
    for (const ImpactEvent& ev : te.events) {
        CHECK(std::abs(std::abs(ev.x_plus.p(1)) - std::abs(ev.x_minus.p(1))) <= 1e-12);
    }
    const ConstantReport energy = check_hybrid_constant(elastic.system.model.H, te);
    CHECK(energy.max_drift <= 1e-9);

    const auto damped = scenarios::make_scenario("rolling_disk");
    const HybridTrajectory td = simulate_hybrid(damped.system, damped.default_x0, 6.0, policy);
    REQUIRE(!td.events.empty());
    for (const ImpactEvent& ev : td.events) {
        CHECK(ev.x_plus.p(1) == -0.8 * ev.x_minus.p(1));
    }
}

TEST_CASE("hybrid constants hold across impacts while non-constants drift") {
    const auto sc = scenarios::make_scenario("rolling_disk");
    SimulationPolicy policy;
    const HybridTrajectory traj = simulate_hybrid(sc.system, sc.default_x0, 6.0, policy);
    REQUIRE(traj.events.size() == 3);
    REQUIRE(!sc.hybrid_constants.empty());
    for (const auto& [name, f] : sc.hybrid_constants) {
        const ConstantReport rep = check_hybrid_constant(f, traj);
        INFO(name);
        CHECK(rep.max_drift <= 1e-9);
    }
    REQUIRE(!sc.non_constants.empty());
    bool some_drift = false;
    for (const auto& [name, f] : sc.non_constants) {
        some_drift = some_drift || check_hybrid_constant(f, traj).max_drift > 0.1;
    }
    CHECK(some_drift);
}

TEST_CASE("no guards yields one segment to the horizon") {
    auto sc = scenarios::make_scenario("billiard");
    HybridSystemSpec open = sc.system;
    open.guards.clear();
    SimulationPolicy policy;
    const HybridTrajectory traj =
        simulate_hybrid(open, PhasePoint{v2(0.0, 0.0), v2(1.0, 0.0)}, 2.0, policy);
    CHECK(traj.events.empty());
    CHECK(traj.segments.size() == 1);
    CHECK(traj.t_end() == 2.0);
    CHECK(std::abs(traj.at(2.0).q(0) - 2.0) <= 1e-12);
}

TEST_CASE("zeno sequences terminate through the dedicated guard") {
    const HybridSystemSpec sys = bouncer(0.5);
    const PhasePoint x0{Vec(Vec::Ones(1)), Vec(Vec::Zero(1))};
    // Accumulation point: sqrt(2) * (1 + 2 e / (1 - e)) = 3 sqrt(2).
    const double t_acc = 3.0 * std::sqrt(2.0);

    SECTION("contracting gaps below step resolution") {
        SimulationPolicy policy;
        const HybridTrajectory traj = simulate_hybrid(sys, x0, 10.0, policy);
        CHECK(traj.termination == Termination::zeno_guard);
        CHECK(traj.termination_detail.find("accumulation") != std::string::npos);
        CHECK(traj.events.size() >= 5);
        CHECK(traj.events.size() <= 30);
        CHECK(traj.t_end() <= t_acc + 1e-6);
    }

    SECTION("impact count cap") {
        SimulationPolicy policy;
        policy.tol.max_impacts = 3;
        const HybridTrajectory traj = simulate_hybrid(sys, x0, 10.0, policy);
        CHECK(traj.termination == Termination::zeno_guard);
        CHECK(traj.termination_detail.find("max_impacts") != std::string::npos);
        CHECK(traj.events.size() == 4);
    }

    SECTION("gap threshold") {
        SimulationPolicy policy;
        policy.tol.zeno_dt = 0.5;
        const HybridTrajectory traj = simulate_hybrid(sys, x0, 10.0, policy);
        CHECK(traj.termination == Termination::zeno_guard);
        CHECK(traj.termination_detail.find("zeno_dt") != std::string::npos);
        // Flight gaps 2 e^n sqrt(2) fall below 0.5 at the fourth impact.
        CHECK(traj.events.size() == 4);
    }

    SECTION("a horizon before the accumulation point ends normally") {
        SimulationPolicy policy;
        const HybridTrajectory traj = simulate_hybrid(sys, x0, 3.0, policy);
        CHECK(traj.termination == Termination::horizon_reached);
        CHECK(traj.t_end() == 3.0);
    }
}

TEST_CASE("repeat runs are bit-identical") {
    const auto sc = scenarios::make_scenario("rolling_disk_forced");
    SimulationPolicy policy;
    const HybridTrajectory a = simulate_hybrid(sc.system, sc.default_x0, 5.0, policy);
    const HybridTrajectory b = simulate_hybrid(sc.system, sc.default_x0, 5.0, policy);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].t == b.events[i].t);
        CHECK((a.events[i].x_plus.p - b.events[i].x_plus.p).cwiseAbs().maxCoeff() == 0.0);
    }
    const PhasePoint fa = a.segments.back().x.back();
    const PhasePoint fb = b.segments.back().x.back();
    CHECK((fa.q - fb.q).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fa.p - fb.p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("located event times converge at fourth order in the step") {
    const auto sc = scenarios::make_scenario("rolling_disk_forced");
    // Closed form for the first contact: pdot_y = B p_y gives
    // y(t) = y0 + p_y0 (exp(B t) - 1) / (m B), so y = R at t = 10 ln(13/12).
    const double t_exact = 10.0 * std::log(13.0 / 12.0);
    auto first_impact = [&](double h) {
        SimulationPolicy policy;
        policy.step.h = h;
        const HybridTrajectory traj = simulate_hybrid(sc.system, sc.default_x0, 1.0, policy);
        REQUIRE(traj.events.size() == 1);
        return std::abs(traj.events[0].t - t_exact);
    };
    const double e16 = first_impact(0.16);
    const double e08 = first_impact(0.08);
    const double e04 = first_impact(0.04);
    CHECK(e04 <= 5e-12);
    const double r1 = e16 / e08;
    const double r2 = e08 / e04;
    CHECK(r1 >= 10.0);
    CHECK(r1 <= 22.0);
    CHECK(r2 >= 10.0);
    CHECK(r2 <= 22.0);

    // The straight-line flow's event time is step-insensitive down to
    // roundoff because the dynamics are linear in t.
    const auto bil = scenarios::make_scenario("billiard");
    SimulationPolicy pa;
    SimulationPolicy pb;
    pb.step.h = 5e-4;
    const HybridTrajectory ta =
        simulate_hybrid(bil.system, PhasePoint{v2(0.0, 0.0), v2(1.0, 0.0)}, 1.5, pa);
    const HybridTrajectory tb =
        simulate_hybrid(bil.system, PhasePoint{v2(0.0, 0.0), v2(1.0, 0.0)}, 1.5, pb);
    REQUIRE(ta.events.size() == 1);
    REQUIRE(tb.events.size() == 1);
    CHECK(std::abs(ta.events[0].t - 1.0) <= 1e-12);
    CHECK(std::abs(ta.events[0].t - tb.events[0].t) <= 1e-12);
}

TEST_CASE("an inadmissible approach passes through the surface") {
    const auto sc = scenarios::make_scenario("rolling_disk");
    SimulationPolicy policy;
    const HybridTrajectory traj =
        simulate_hybrid(sc.system, PhasePoint{v3(0.0, 1.5, 0.0), v3(1.0, -0.6, 0.9)}, 2.0,
                        policy);
    CHECK(traj.events.empty());
    CHECK(traj.segments.size() == 1);
    CHECK(traj.at(2.0).q(1) < 1.0);
    CHECK(traj.termination == Termination::horizon_reached);
}

TEST_CASE("invalid starts and resets are rejected") {
    const auto bil = scenarios::make_scenario("billiard");
    SimulationPolicy policy;
    CHECK_THROWS_AS(
        simulate_hybrid(bil.system, PhasePoint{v2(1.0, 0.0), v2(1.0, 0.0)}, 1.0, policy), Error);

    const auto nh = scenarios::make_scenario("nh_particle");
    CHECK_THROWS_AS(
        simulate_hybrid(nh.system, PhasePoint{v3(0.0, 0.0, 0.0), v3(0.0, 1.0, 1.0)}, 1.0, policy),
        ConstraintViolation);

    // A momentum-scaling impact with mu = (1,1,1) can only stay on the
    // constraint when the first body momentum vanishes at contact.
    const auto rigid = scenarios::make_scenario("rigid_body");
    CHECK_THROWS_AS(
        simulate_hybrid(rigid.system, PhasePoint{v3(0.3, 0.0, 0.0), v3(-1.0, -1.0, 4.5)}, 1.0,
                        policy),
        ResetOffConstraint);
}
