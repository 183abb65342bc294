// Guard triggering rules, event localization accuracy, ordering across
// multiple guards, and admissibility gating.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hybridhj/events.hpp"
#include "hybridhj/model.hpp"
#include "hybridhj/scenarios.hpp"

using namespace hybridhj;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

DynamicsModel free_1dof() {
    DynamicsModel m;
    m.n = 1;
    m.H = [](const PhasePoint& x) { return 0.5 * x.p(0) * x.p(0); };
    m.dH_dq = [](const PhasePoint& x) { return Vec(Vec::Zero(x.q.size())); };
    m.dH_dp = [](const PhasePoint& x) { return Vec(x.p); };
    return m;
}

OdeField packed(const DynamicsModel& m, FieldKind kind) {
    return [&m, kind](const Vec& xv) {
        const FieldValue f = eval_field(m, kind, unpack_state(xv), Tolerances{}, false);
        Vec out(xv.size());
        out << f.qdot, f.pdot;
        return out;
    };
}

} // namespace

TEST_CASE("pack and unpack are inverse") {
    const PhasePoint x{v2(0.25, -3.0), v2(1.5, 4.0)};
    const Vec flat = pack_state(x);
    REQUIRE(flat.size() == 4);
    const PhasePoint back = unpack_state(flat);
    CHECK((back.q - x.q).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.p - x.p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("guard trigger truth table") {
    GuardSpec dec;
    dec.direction = GuardDirection::decreasing;
    GuardSpec inc;
    inc.direction = GuardDirection::increasing;
    GuardSpec either;
    either.direction = GuardDirection::either;
    const double tol = 1e-10;

    CHECK(guard_triggers(dec, 0.5, -0.1, tol));
    CHECK(guard_triggers(dec, 0.5, 0.0, tol)); // touching zero at the right end counts
    CHECK_FALSE(guard_triggers(dec, 0.5, 0.2, tol));
    CHECK_FALSE(guard_triggers(dec, -0.5, 0.1, tol));
    // A start already on the surface encodes post-impact clearance.
    CHECK_FALSE(guard_triggers(dec, 5e-11, -0.1, tol));

    CHECK(guard_triggers(inc, -0.5, 0.1, tol));
    CHECK(guard_triggers(inc, -0.5, 0.0, tol));
    CHECK_FALSE(guard_triggers(inc, 0.5, -0.1, tol));
    CHECK_FALSE(guard_triggers(inc, -5e-11, 0.1, tol));

    CHECK(guard_triggers(either, 0.5, -0.1, tol));
    CHECK(guard_triggers(either, -0.5, 0.1, tol));
    CHECK_FALSE(guard_triggers(either, 5e-11, -0.1, tol));
    CHECK_FALSE(guard_triggers(either, -5e-11, 0.1, tol));
}

TEST_CASE("wall crossing of the bounded plane scenario is located sharply") {
    const auto sc = scenarios::make_scenario("billiard");
    const auto& guard = sc.system.guards.at(0);
    const IntegrationResult r =
        integrate_ode(packed(sc.system.model, FieldKind::hamiltonian),
                      (Vec(4) << 0.0, -0.5, 0.0, 1.0).finished(), 0.0, 2.0, StepPolicy{});

    const double t_star = locate_event(r.dense, guard, 1.0, 1.6);
    CHECK(std::abs(t_star - 1.5) <= 1e-10);
    CHECK(std::abs(guard.g(unpack_state(r.dense.eval(t_star)))) <= 1e-12);

    const auto ev = earliest_event(r.dense, sc.system.guards, 0.0, 2.0);
    REQUIRE(ev.has_value());
    CHECK(ev->guard_index == 0);
    CHECK(std::abs(ev->t_star - 1.5) <= 1e-10);
}

TEST_CASE("a start on the surface is returned as-is and does not retrigger") {
    const auto sc = scenarios::make_scenario("billiard");
    const auto& guard = sc.system.guards.at(0);
    const IntegrationResult r =
        integrate_ode(packed(sc.system.model, FieldKind::hamiltonian),
                      (Vec(4) << 0.0, -1.0, 0.0, 1.0).finished(), 0.0, 2.5, StepPolicy{});

    // |g| at the left end is within guard_tol, so the bracket start wins.
    CHECK(locate_event(r.dense, guard, 0.0, 1.0) == 0.0);

    // The interval scan must not fire at t = 0; the next true crossing is the
    // tangential touch at t = 2 where the path reaches the opposite wall.
    const auto ev = earliest_event(r.dense, sc.system.guards, 0.0, 2.5);
    REQUIRE(ev.has_value());
    CHECK(ev->t_star > 1.0);
    CHECK(std::abs(ev->t_star - 2.0) <= 1e-6);
}

TEST_CASE("the earliest of several guards wins and indices refer to the vector") {
    const DynamicsModel m = free_1dof();
    const IntegrationResult r = integrate_ode(packed(m, FieldKind::hamiltonian), v2(0.0, 1.0),
                                              0.0, 2.0, StepPolicy{});
    std::vector<GuardSpec> guards(2);
    guards[0].g = [](const PhasePoint& x) { return 1.2 - x.q(0); };
    guards[0].id = 7;
    guards[1].g = [](const PhasePoint& x) { return 0.7 - x.q(0); };
    guards[1].id = 9;

    const auto ev = earliest_event(r.dense, guards, 0.0, 2.0);
    REQUIRE(ev.has_value());
    CHECK(ev->guard_index == 1);
    CHECK(std::abs(ev->t_star - 0.7) <= 1e-10);
}

TEST_CASE("inadmissible crossings are skipped and the scan resumes past them") {
    const DynamicsModel m = free_1dof();
    const IntegrationResult r = integrate_ode(packed(m, FieldKind::hamiltonian), v2(0.0, 1.0),
                                              0.0, 4.0, StepPolicy{});

    SECTION("a later guard takes over") {
        std::vector<GuardSpec> guards(2);
        guards[0].g = [](const PhasePoint& x) { return 1.2 - x.q(0); };
        guards[1].g = [](const PhasePoint& x) { return 0.7 - x.q(0); };
        guards[1].admissibility = [](const PhasePoint&) { return false; };
        const auto ev = earliest_event(r.dense, guards, 0.0, 4.0);
        REQUIRE(ev.has_value());
        CHECK(ev->guard_index == 0);
        CHECK(std::abs(ev->t_star - 1.2) <= 1e-10);
    }

    SECTION("all crossings inadmissible yields no event") {
        std::vector<GuardSpec> guards(1);
        guards[0].g = [](const PhasePoint& x) { return 0.7 - x.q(0); };
        guards[0].admissibility = [](const PhasePoint&) { return false; };
        CHECK_FALSE(earliest_event(r.dense, guards, 0.0, 4.0).has_value());
    }

    SECTION("the same guard fires at its next admissible crossing") {
        // g = (q - 1)(q - 3) crosses down at q = 1 and up at q = 3; the
        // predicate rejects the first crossing only.
        std::vector<GuardSpec> guards(1);
        guards[0].g = [](const PhasePoint& x) {
            return (x.q(0) - 1.0) * (x.q(0) - 3.0);
        };
        guards[0].direction = GuardDirection::either;
        guards[0].admissibility = [](const PhasePoint& x) { return x.q(0) > 2.0; };
        const auto ev = earliest_event(r.dense, guards, 0.0, 4.0);
        REQUIRE(ev.has_value());
        CHECK(std::abs(ev->t_star - 3.0) <= 1e-10);
    }

    SECTION("the admissibility predicate sees the crossing state") {
        std::vector<GuardSpec> guards(1);
        guards[0].g = [](const PhasePoint& x) { return 0.7 - x.q(0); };
        double seen_q = -1.0;
        guards[0].admissibility = [&seen_q](const PhasePoint& x) {
            seen_q = x.q(0);
            return true;
        };
        const auto ev = earliest_event(r.dense, guards, 0.0, 4.0);
        REQUIRE(ev.has_value());
        CHECK(std::abs(seen_q - 0.7) <= 1e-10);
    }
}

TEST_CASE("missing or wrong-direction sign changes raise BracketLost") {
    const DynamicsModel m = free_1dof();
    const IntegrationResult r = integrate_ode(packed(m, FieldKind::hamiltonian), v2(0.0, 1.0),
                                              0.0, 1.0, StepPolicy{});

    GuardSpec never;
    never.g = [](const PhasePoint& x) { return 5.0 - x.q(0); };
    CHECK_THROWS_AS(locate_event(r.dense, never, 0.0, 1.0), BracketLost);

    // q - 0.7 rises through zero, but a decreasing guard must not take it.
    GuardSpec wrong_way;
    wrong_way.g = [](const PhasePoint& x) { return x.q(0) - 0.7; };
    wrong_way.direction = GuardDirection::decreasing;
    CHECK_THROWS_AS(locate_event(r.dense, wrong_way, 0.0, 1.0), BracketLost);
    CHECK_FALSE(earliest_event(r.dense, {wrong_way}, 0.0, 1.0).has_value());

    CHECK_THROWS_AS(locate_event(r.dense, never, 1.0, 1.0), Error);
}
