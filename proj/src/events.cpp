#include "hybridhj/events.hpp"

#include <cmath>

#include "hybridhj/log.hpp"

namespace hybridhj {

PhasePoint unpack_state(const Vec& x) {
    const Eigen::Index n = x.size() / 2;
    PhasePoint out;
    out.q = x.head(n);
    out.p = x.tail(n);
    return out;
}

Vec pack_state(const PhasePoint& x) {
    Vec out(x.q.size() + x.p.size());
    out << x.q, x.p;
    return out;
}

bool guard_triggers(const GuardSpec& guard, double g_a, double g_b, double guard_tol) {
    switch (guard.direction) {
        case GuardDirection::decreasing:
            return g_a > guard_tol && g_b <= 0.0;
        case GuardDirection::increasing:
            return g_a < -guard_tol && g_b >= 0.0;
        case GuardDirection::either:
            return (g_a > guard_tol && g_b <= 0.0) || (g_a < -guard_tol && g_b >= 0.0);
    }
    return false;
}

void guard_scan_seed(GuardScanState& st, double g, double guard_tol) {
    st.armed_dec = g > guard_tol;
    st.armed_inc = g < -guard_tol;
}

bool guard_scan_advance(const GuardSpec& guard, GuardScanState& st, double g, double guard_tol) {
    const bool want_dec = guard.direction != GuardDirection::increasing;
    const bool want_inc = guard.direction != GuardDirection::decreasing;
    bool fire = false;
    if (want_dec && st.armed_dec && g <= 0.0) {
        st.armed_dec = false;
        fire = true;
    } else if (want_inc && st.armed_inc && g >= 0.0) {
        st.armed_inc = false;
        fire = true;
    }
    if (g > guard_tol) {
        st.armed_dec = true;
        st.armed_inc = false;
    } else if (g < -guard_tol) {
        st.armed_inc = true;
        st.armed_dec = false;
    }
    return fire;
}

namespace {

double eval_guard(const DenseOutput& dense, const GuardSpec& guard, double t) {
    return guard.g(unpack_state(dense.eval(t)));
}

} // namespace

double locate_event(const DenseOutput& dense, const GuardSpec& guard, double t_a, double t_b,
                    const Tolerances& tol) {
    if (!(t_b > t_a)) throw Error("locate_event: empty bracket");
    double ga = eval_guard(dense, guard, t_a);
    if (std::abs(ga) <= tol.guard_tol) return t_a;
    const double gb = eval_guard(dense, guard, t_b);
    if (!guard_triggers(guard, ga, gb, 0.0)) {
        throw BracketLost("locate_event: no directional sign change across the bracket");
    }

    // Bisection maintains a directional sign change on [a, b].
    double a = t_a;
    double b = t_b;
    double ga_cur = ga;
    double gb_cur = gb;
    while (b - a > tol.time_tol(a)) {
        const double m = 0.5 * (a + b);
        const double gm = eval_guard(dense, guard, m);
        const bool left = (ga_cur > 0.0) ? (gm <= 0.0) : (gm >= 0.0);
        if (left) {
            b = m;
            gb_cur = gm;
        } else {
            a = m;
            ga_cur = gm;
        }
        if (m == a && m == b) break; // bracket no longer representable
    }

    // Secant polish pushes |g| from the bisection bound toward roundoff,
    // which the impact-drift budget of long multi-impact runs relies on.
    double t0 = a, g0 = ga_cur;
    double t1 = b, g1 = gb_cur;
    double best_t = std::abs(g0) < std::abs(g1) ? t0 : t1;
    double best_g = std::abs(g0) < std::abs(g1) ? g0 : g1;
    for (int it = 0; it < 8 && std::abs(best_g) > 0.0; ++it) {
        const double denom = g1 - g0;
        if (denom == 0.0) break;
        double t2 = t1 - g1 * (t1 - t0) / denom;
        if (!(t2 >= t_a && t2 <= t_b) || !std::isfinite(t2)) break;
        const double g2 = eval_guard(dense, guard, t2);
        t0 = t1;
        g0 = g1;
        t1 = t2;
        g1 = g2;
        if (std::abs(g2) < std::abs(best_g)) {
            best_t = t2;
            best_g = g2;
        }
    }
    if (std::abs(best_g) > tol.guard_tol) {
        throw Error("locate_event: located crossing misses the guard tolerance, |g| = " +
                    std::to_string(std::abs(best_g)));
    }
    return best_t;
}

std::optional<LocatedEvent> earliest_event(const DenseOutput& dense,
                                           const std::vector<GuardSpec>& guards, double t_a,
                                           double t_b, const Tolerances& tol) {
    if (dense.empty() || !(t_b > t_a)) return std::nullopt;

    // Sample times: the window ends plus every interior node.
    std::vector<double> ts;
    ts.reserve(dense.size() + 2);
    ts.push_back(t_a);
    for (std::size_t i = 0; i < dense.size(); ++i) {
        const double t = dense.t_node(i);
        if (t > t_a && t < t_b) ts.push_back(t);
    }
    ts.push_back(t_b);

    std::optional<LocatedEvent> best;
    for (std::size_t gi = 0; gi < guards.size(); ++gi) {
        const GuardSpec& guard = guards[gi];
        // Stateful scan for the first directional crossing of this guard;
        // inadmissible crossings are skipped and the scan resumes past them.
        GuardScanState st;
        guard_scan_seed(st, eval_guard(dense, guard, ts.front()), tol.guard_tol);
        for (std::size_t i = 1; i < ts.size(); ++i) {
            if (!guard_scan_advance(guard, st, eval_guard(dense, guard, ts[i]), tol.guard_tol)) {
                continue;
            }
            const double t_star = locate_event(dense, guard, ts[i - 1], ts[i], tol);
            const PhasePoint x_star = unpack_state(dense.eval(t_star));
            if (!guard.admissibility || guard.admissibility(x_star)) {
                if (!best || t_star < best->t_star) {
                    best = LocatedEvent{t_star, static_cast<int>(gi)};
                }
                break;
            }
            log::warn("guard " + std::to_string(guard.id) + " crossed at t=" +
                      std::to_string(t_star) + " but admissibility fails; continuing");
        }
    }
    return best;
}

} // namespace hybridhj
