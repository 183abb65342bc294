#include "hybridhj/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "hybridhj/log.hpp"

namespace hybridhj {

namespace {

// Stage states inside an explicit Runge-Kutta step leave the constraint
// surface at second order in the step, so the integration field skips the
// membership precondition; accepted states are checked by the caller.
OdeField packed_field(const DynamicsModel& model, FieldKind kind, const Tolerances& tol) {
    return [&model, kind, tol](const Vec& xv) {
        const FieldValue f = eval_field(model, kind, unpack_state(xv), tol, false);
        Vec out(xv.size());
        out << f.qdot, f.pdot;
        return out;
    };
}

std::string format_residual(double r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", r);
    return buf;
}

// One-sided rate of a guard along the flow, by a micro RK4 probe step.
double guard_rate(const OdeField& field, const GuardSpec& guard, const PhasePoint& x,
                  double delta) {
    const Vec xv = pack_state(x);
    const Vec xp = rk4_step(field, xv, delta);
    return (guard.g(unpack_state(xp)) - guard.g(x)) / delta;
}

} // namespace

SegmentResult integrate_segment(const DynamicsModel& model, FieldKind kind, const PhasePoint& x0,
                                double t0, double t_end, const StepPolicy& policy,
                                const Tolerances& tol) {
    require_finite_state(x0, "integrate_segment");
    const IntegrationResult r = integrate_ode(packed_field(model, kind, tol), pack_state(x0), t0,
                                              t_end, policy);
    SegmentResult out;
    out.t = r.t;
    out.x.reserve(r.x.size());
    for (const Vec& xv : r.x) out.x.push_back(unpack_state(xv));
    out.dense = r.dense;
    return out;
}

PhasePoint HybridTrajectory::at(double t) const {
    if (segments.empty()) throw Error("HybridTrajectory::at: empty trajectory");
    // Last segment whose first sample time is <= t; at an impact time this
    // selects the post-impact segment (the x+ convention).
    std::size_t k = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (!segments[i].t.empty() && segments[i].t.front() <= t) k = i;
    }
    const TrajectorySegment& seg = segments[k];
    if (seg.t.size() == 1) return seg.x.front();
    return unpack_state(seg.dense.eval(std::min(t, seg.t.back())));
}

double HybridTrajectory::t_end() const {
    if (segments.empty() || segments.back().t.empty()) return 0.0;
    return segments.back().t.back();
}

HybridTrajectory simulate_hybrid(const HybridSystemSpec& spec, const PhasePoint& x0,
                                 double horizon, const SimulationPolicy& policy) {
    const Tolerances& tol = policy.tol;
    const double h = policy.step.h;
    if (!(h > 0.0)) throw Error("simulate_hybrid: step must be positive");
    if (!(horizon >= 0.0)) throw Error("simulate_hybrid: horizon must be non-negative");
    require_finite_state(x0, "simulate_hybrid");

    const bool constrained = spec.model.constraints.has_value();
    if (constrained) {
        const ConstraintCheck c = is_on_constraint(spec.model, x0, tol);
        if (!c.on) {
            throw ConstraintViolation("simulate_hybrid: x0 off the momentum constraint, residual " +
                                      format_residual(c.residual));
        }
    }
    for (const GuardSpec& guard : spec.guards) {
        if (std::abs(guard.g(x0)) <= tol.guard_tol &&
            (!guard.admissibility || guard.admissibility(x0))) {
            throw Error("simulate_hybrid: initial state lies on the switching surface (guard " +
                        std::to_string(guard.id) + ")");
        }
    }

    HybridTrajectory traj;
    const OdeField field = packed_field(spec.model, spec.kind, tol);

    double t = 0.0;
    PhasePoint x = x0;

    if (horizon == 0.0) {
        TrajectorySegment seg;
        seg.t.push_back(0.0);
        seg.x.push_back(x);
        seg.dense.append(0.0, pack_state(x), pack_state(x) * 0.0);
        traj.segments.push_back(std::move(seg));
        traj.termination = Termination::horizon_reached;
        return traj;
    }

    const double t_eps = 1e-12 * (1.0 + horizon);
    double prev_impact_t = -std::numeric_limits<double>::infinity();
    double prev_gap = std::numeric_limits<double>::infinity();
    int impact_count = 0;
    bool drift_warned = false;

    while (true) {
        TrajectorySegment seg;
        const double t_start = t;
        std::size_t j = 0;
        try {
            seg.dense.append(t, pack_state(x), field(pack_state(x)));
        } catch (const ChartSingularity& e) {
            traj.termination = Termination::error;
            traj.termination_detail = e.what();
            seg.t.push_back(t);
            seg.x.push_back(x);
            traj.segments.push_back(std::move(seg));
            return traj;
        }
        seg.t.push_back(t);
        seg.x.push_back(x);

        std::vector<GuardScanState> scan(spec.guards.size());
        for (std::size_t gi = 0; gi < spec.guards.size(); ++gi) {
            guard_scan_seed(scan[gi], spec.guards[gi].g(x), tol.guard_tol);
        }

        bool ended_by_event = false;
        while (t < horizon - t_eps) {
            const bool final_step = t_start + static_cast<double>(j + 1) * h >= horizon - t_eps;
            const double t_next = final_step ? horizon : t_start + static_cast<double>(j + 1) * h;

            Vec xv_next;
            try {
                xv_next = rk4_step(field, pack_state(x), t_next - t);
                if (!xv_next.allFinite()) {
                    throw NonFiniteState("simulate_hybrid: state became non-finite");
                }
                seg.dense.append(t_next, xv_next, field(xv_next));
            } catch (const ChartSingularity& e) {
                traj.termination = Termination::error;
                traj.termination_detail = e.what();
                traj.segments.push_back(std::move(seg));
                return traj;
            } catch (const NonFiniteState& e) {
                traj.termination = Termination::error;
                traj.termination_detail = e.what();
                traj.segments.push_back(std::move(seg));
                return traj;
            }
            const PhasePoint x_next = unpack_state(xv_next);

            if (constrained && !drift_warned) {
                const ConstraintCheck c = is_on_constraint(spec.model, x_next, tol);
                if (!c.on) {
                    log::warn("simulate_hybrid: accepted state drifted off the momentum "
                              "constraint, residual " +
                              format_residual(c.residual) + " at t=" + std::to_string(t_next));
                    drift_warned = true;
                }
            }

            // Stateful trigger scan over this step, earliest admissible
            // crossing wins; inadmissible crossings log and do not impact.
            double best_t = std::numeric_limits<double>::infinity();
            int best_gi = -1;
            for (std::size_t gi = 0; gi < spec.guards.size(); ++gi) {
                const double g_now = spec.guards[gi].g(x_next);
                if (guard_scan_advance(spec.guards[gi], scan[gi], g_now, tol.guard_tol)) {
                    const double t_star = locate_event(seg.dense, spec.guards[gi], t, t_next, tol);
                    const PhasePoint x_star = unpack_state(seg.dense.eval(t_star));
                    const GuardSpec& guard = spec.guards[gi];
                    if (guard.admissibility && !guard.admissibility(x_star)) {
                        log::warn("guard " + std::to_string(guard.id) + " crossed at t=" +
                                  std::to_string(t_star) +
                                  " but admissibility fails; continuing through the surface");
                    } else if (t_star < best_t) {
                        best_t = t_star;
                        best_gi = static_cast<int>(gi);
                    }
                }
            }

            if (best_gi >= 0) {
                const GuardSpec& guard = spec.guards[static_cast<std::size_t>(best_gi)];
                const double t_star = best_t;
                const PhasePoint x_minus = unpack_state(seg.dense.eval(t_star));

                while (!seg.t.empty() && seg.t.back() > t_star) {
                    seg.t.pop_back();
                    seg.x.pop_back();
                }
                if (seg.t.empty() || seg.t.back() < t_star) {
                    seg.t.push_back(t_star);
                    seg.x.push_back(x_minus);
                }

                PhasePoint x_plus = spec.reset.delta(x_minus);
                require_finite_state(x_plus, "reset");
                if (constrained) {
                    const ConstraintCheck c = is_on_constraint(spec.model, x_plus, tol);
                    if (!c.on) {
                        throw ResetOffConstraint(
                            "simulate_hybrid: reset image leaves the momentum constraint at t=" +
                            std::to_string(t_star) + ", residual " + format_residual(c.residual));
                    }
                }

                // Post-impact clearance: the state must actually depart the
                // surface it just hit.
                const double rate_delta = 1e-8 * (1.0 + std::abs(t_star));
                const double gdot_minus = guard_rate(field, guard, x_minus, -rate_delta);
                const double gdot_plus = guard_rate(field, guard, x_plus, rate_delta);
                if (std::abs(gdot_plus) <= 1e-12 * (1.0 + std::abs(gdot_minus))) {
                    throw Error("simulate_hybrid: post-impact state does not depart the guard "
                                "surface (guard " +
                                std::to_string(guard.id) + ", t=" + std::to_string(t_star) + ")");
                }

                traj.events.push_back(ImpactEvent{t_star, guard.id, x_minus, x_plus});
                ++impact_count;
                const double gap = t_star - prev_impact_t;

                bool zeno = false;
                std::string why;
                if (impact_count > tol.max_impacts) {
                    zeno = true;
                    why = "impact count exceeded max_impacts";
                } else if (gap < tol.zeno_dt) {
                    zeno = true;
                    why = "consecutive impacts closer than zeno_dt";
                } else if (gap < 2.0 * h && gap < prev_gap) {
                    // Contracting impact sequence at step resolution: project
                    // the geometric accumulation point; if it lands inside
                    // the horizon the remaining events cannot be resolved.
                    const double r = gap / prev_gap;
                    const double t_acc = t_star + gap * r / (1.0 - r);
                    if (t_acc <= horizon) {
                        zeno = true;
                        why = "contracting impact sequence beneath step resolution "
                              "(projected accumulation at t=" +
                              std::to_string(t_acc) + ")";
                    }
                }
                prev_gap = gap;
                prev_impact_t = t_star;

                traj.segments.push_back(std::move(seg));
                if (zeno) {
                    traj.termination = Termination::zeno_guard;
                    traj.termination_detail = why;
                    return traj;
                }

                t = t_star;
                x = x_plus;
                ended_by_event = true;
                break;
            }

            t = t_next;
            x = x_next;
            seg.t.push_back(t);
            seg.x.push_back(x);
            ++j;
        }

        if (!ended_by_event) {
            traj.segments.push_back(std::move(seg));
            traj.termination = Termination::horizon_reached;
            return traj;
        }
    }
}

ConstantReport check_hybrid_constant(const std::function<double(const PhasePoint&)>& f,
                                     const HybridTrajectory& traj) {
    if (traj.segments.empty() || traj.segments.front().x.empty()) {
        throw Error("check_hybrid_constant: empty trajectory");
    }
    const double f0 = f(traj.segments.front().x.front());
    ConstantReport rep{0.0, f0, traj.segments.front().t.front()};
    for (const TrajectorySegment& seg : traj.segments) {
        for (std::size_t i = 0; i < seg.x.size(); ++i) {
            const double d = std::abs(f(seg.x[i]) - f0);
            if (d > rep.max_drift) {
                rep.max_drift = d;
                rep.t_worst = seg.t[i];
            }
        }
    }
    for (const ImpactEvent& ev : traj.events) {
        for (const PhasePoint* x : {&ev.x_minus, &ev.x_plus}) {
            const double d = std::abs(f(*x) - f0);
            if (d > rep.max_drift) {
                rep.max_drift = d;
                rep.t_worst = ev.t;
            }
        }
    }
    return rep;
}

} // namespace hybridhj
