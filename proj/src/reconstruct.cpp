#include "hybridhj/reconstruct.hpp"

#include "hybridhj/events.hpp"
#include "hybridhj/log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hybridhj {

namespace {

Vec lift_state(const Vec& q, const Covector& p) {
    Vec x(q.size() + p.size());
    x.head(q.size()) = q;
    x.tail(p.size()) = p;
    return x;
}

struct ActiveChart {
    int region = 0;
    Vec lambda;
};

} // namespace

ReconstructionRun reconstruct(const HybridSystemSpec& spec, const SolutionFamily& family,
                              const TransferMap& transfer, const BasePoint& q0, const Vec& lambda0,
                              int region0, double horizon, const SimulationPolicy& policy) {
    const Tolerances& tol = policy.tol;
    if (!(policy.step.h > 0.0)) throw BadParameters("step size must be positive");
    if (!(horizon >= 0.0)) throw BadParameters("horizon must be nonnegative");
    require_finite_state(q0.q, "reconstruct initial base point");
    require_finite_state(lambda0, "reconstruct initial parameters");
    if (!family.region(region0).contains(q0)) {
        throw RegionViolation("initial base point is outside the starting region");
    }

    // Advisory only: a family that is far from solving the stationary
    // equation at the start point is still reconstructible, but worth a note.
    try {
        ResidualReport probe;
        switch (spec.kind) {
        case FieldKind::hamiltonian:
            probe = residual_conservative(spec.model, family, region0, lambda0, {q0}, tol);
            break;
        case FieldKind::forced:
            probe = residual_forced(spec.model, family, region0, lambda0, {q0}, tol);
            break;
        case FieldKind::nonholonomic:
            probe = residual_nonholonomic(spec.model, family, region0, lambda0, {q0}, tol);
            break;
        case FieldKind::custom:
            break;
        }
        if (probe.max_residual > 1e-6) {
            std::ostringstream os;
            os << "reconstruct: stationary residual " << probe.max_residual
               << " at the initial point; the family may not solve the equation";
            log::warn(os.str());
        }
    } catch (const Error&) {
        // The advisory probe must never block an otherwise valid run.
    }

    ReconstructionRun run;
    run.lifted.termination = Termination::horizon_reached;

    ActiveChart chart{region0, lambda0};
    double t = 0.0;
    Vec qv = q0.q;
    int impact_count = 0;
    double prev_gap = std::numeric_limits<double>::infinity();
    double last_impact_t = std::numeric_limits<double>::quiet_NaN();

    // Base vector field of the active chart: the projected dynamics with the
    // momentum slot filled by gamma(.; lambda) of that chart.
    const auto base_field_for = [&spec, &family, &tol](const ActiveChart& ch) {
        return [&spec, &family, &tol, ch](const Vec& q_in) {
            const BasePoint b{q_in};
            const auto gamma = [&family, ch](const BasePoint& bp) {
                return family.gamma(ch.region, bp, ch.lambda);
            };
            return projected_field(spec.model, spec.kind, gamma, b, tol);
        };
    };

    const auto gamma_at = [&family](const ActiveChart& ch, const Vec& q_in) {
        return family.gamma(ch.region, BasePoint{q_in}, ch.lambda);
    };

    // Time derivative of the lifted state [q; gamma(q)] along the base flow.
    const auto lift_derivative = [&family, &tol](const ActiveChart& ch, const Vec& q_in,
                                                 const Vec& qdot) {
        const BasePoint bp{q_in};
        const Mat J = family.dgamma_dq ? family.dgamma_dq(ch.region, bp, ch.lambda)
                                       : fd_dgamma_dq(family, ch.region, bp, ch.lambda, tol);
        Vec xdot(q_in.size() + J.rows());
        xdot.head(q_in.size()) = qdot;
        xdot.tail(J.rows()) = J * qdot;
        return xdot;
    };

    if (horizon == 0.0) {
        BaseSegment seg;
        seg.region_id = chart.region;
        seg.lambda = chart.lambda;
        seg.t.push_back(0.0);
        seg.q.push_back(BasePoint{qv});
        run.base_segments.push_back(std::move(seg));
        TrajectorySegment lifted;
        const Covector g0 = gamma_at(chart, qv);
        lifted.t.push_back(0.0);
        lifted.x.push_back(PhasePoint{qv, g0});
        const Vec x0 = lift_state(qv, g0);
        lifted.dense.append(0.0, x0, Vec::Zero(x0.size()));
        run.lifted.segments.push_back(std::move(lifted));
        return run;
    }

    const double h = policy.step.h;
    bool done = false;
    while (!done) {
        const double t_start = t;
        BaseSegment seg;
        seg.region_id = chart.region;
        seg.lambda = chart.lambda;
        TrajectorySegment lifted;

        const auto field = base_field_for(chart);
        const auto append_node = [&](double tn, const Vec& q_in, const Vec& qdot) {
            lifted.dense.append(tn, lift_state(q_in, gamma_at(chart, q_in)),
                                lift_derivative(chart, q_in, qdot));
        };
        const auto push_row = [&](double tn, const Vec& q_in) {
            seg.t.push_back(tn);
            seg.q.push_back(BasePoint{q_in});
            lifted.t.push_back(tn);
            lifted.x.push_back(PhasePoint{q_in, gamma_at(chart, q_in)});
        };

        Vec f0;
        try {
            f0 = field(qv);
            push_row(t, qv);
            append_node(t, qv, f0);
        } catch (const Error& e) {
            log::error(std::string("reconstruct: field evaluation failed at segment start: ") +
                       e.what());
            if (seg.t.empty()) {
                seg.t.push_back(t);
                seg.q.push_back(BasePoint{qv});
                lifted.t.push_back(t);
                lifted.x.push_back(PhasePoint{qv, gamma_at(chart, qv)});
            }
            if (lifted.dense.empty()) {
                const Vec packed = pack_state(lifted.x.back());
                lifted.dense.append(t, packed, Vec::Zero(packed.size()));
            }
            run.base_segments.push_back(std::move(seg));
            run.lifted.segments.push_back(std::move(lifted));
            run.lifted.termination = Termination::error;
            run.lifted.termination_detail = e.what();
            return run;
        }

        // Persistent per-guard trigger state across the segment's steps; a
        // post-impact start on the surface stays quiet until the lifted flow
        // departs the tolerance band.
        std::vector<GuardScanState> scan(spec.guards.size());
        for (std::size_t gi = 0; gi < spec.guards.size(); ++gi) {
            guard_scan_seed(scan[gi], spec.guards[gi].g(lifted.x.back()), tol.guard_tol);
        }

        bool ended_by_event = false;
        std::size_t step_index = 0;
        while (t < horizon - tol.time_tol(horizon)) {
            const double t_target = t_start + static_cast<double>(step_index + 1) * h;
            const bool final_step = t_target >= horizon - tol.time_tol(horizon);
            const double t_next = final_step ? horizon : t_target;
            Vec q_next;
            Vec f_next;
            try {
                q_next = rk4_step(field, qv, t_next - t);
                require_finite_state(q_next, "reconstructed base state");
                f_next = field(q_next);
                append_node(t_next, q_next, f_next);
            } catch (const Error& e) {
                log::error(std::string("reconstruct: integration failed: ") + e.what());
                run.base_segments.push_back(std::move(seg));
                run.lifted.segments.push_back(std::move(lifted));
                run.lifted.termination = Termination::error;
                run.lifted.termination_detail = e.what();
                return run;
            }

            const PhasePoint x_lift_next{q_next, gamma_at(chart, q_next)};
            std::optional<LocatedEvent> hit;
            for (std::size_t gi = 0; gi < spec.guards.size(); ++gi) {
                const GuardSpec& guard = spec.guards[gi];
                if (!guard_scan_advance(guard, scan[gi], guard.g(x_lift_next), tol.guard_tol)) {
                    continue;
                }
                const double t_star = locate_event(lifted.dense, guard, t, t_next, tol);
                const PhasePoint x_star = unpack_state(lifted.dense.eval(t_star));
                if (guard.admissibility && !guard.admissibility(x_star)) {
                    log::warn("guard " + std::to_string(guard.id) + " crossed at t=" +
                              std::to_string(t_star) +
                              " but admissibility fails; continuing through the surface");
                    continue;
                }
                if (!hit || t_star < hit->t_star) {
                    hit = LocatedEvent{t_star, static_cast<int>(gi)};
                }
            }

            if (hit) {
                const double t_star = hit->t_star;
                const Vec q_star = lifted.dense.eval(t_star).head(qv.size());

                while (!seg.t.empty() && seg.t.back() > t_star) {
                    seg.t.pop_back();
                    seg.q.pop_back();
                    lifted.t.pop_back();
                    lifted.x.pop_back();
                }
                if (seg.t.empty() || t_star > seg.t.back()) {
                    push_row(t_star, q_star);
                }

                const Covector gk = gamma_at(chart, q_star);
                const PhasePoint x_minus{q_star, gk};
                const PhasePoint x_plus_direct = spec.reset.delta(x_minus);

                // Pick the post-impact region by probing each candidate chart
                // a short time along its own projected field.
                const BasePoint q_star_bp{q_star};
                std::optional<ActiveChart> next_chart;
                bool ambiguous = false;
                for (const Region& cand : family.regions) {
                    const Vec lam_next =
                        transfer.tau(chart.region, cand.id, q_star_bp, chart.lambda);
                    ActiveChart cc{cand.id, lam_next};
                    Vec qdot;
                    try {
                        qdot = base_field_for(cc)(q_star);
                    } catch (const Error&) {
                        continue;
                    }
                    const Vec probe = q_star + tol.probe_dt(t_star) * qdot;
                    if (cand.contains(BasePoint{probe})) {
                        if (next_chart) {
                            ambiguous = true;
                        } else {
                            next_chart = cc;
                        }
                    }
                }
                if (ambiguous) {
                    throw RegionAmbiguous("multiple regions admit the post-impact base flow at t=" +
                                          std::to_string(t_star));
                }
                if (!next_chart) {
                    throw RegionAmbiguous("no region admits the post-impact base flow at t=" +
                                          std::to_string(t_star));
                }

                const Covector gl = gamma_at(*next_chart, q_star);
                const double lift_gap = (gl - x_plus_direct.p).cwiseAbs().maxCoeff();
                if (lift_gap > tol.lift_tol) {
                    std::ostringstream os;
                    os << "post-impact lift mismatch " << lift_gap << " at t=" << t_star;
                    throw LiftMismatch(os.str());
                }

                ImpactEvent ev;
                ev.t = t_star;
                ev.guard_id = spec.guards[static_cast<std::size_t>(hit->guard_index)].id;
                ev.x_minus = x_minus;
                ev.x_plus = PhasePoint{q_star, gl};
                run.lifted.events.push_back(ev);

                TransferRecord rec;
                rec.t = t_star;
                rec.guard_id = ev.guard_id;
                rec.from_region = chart.region;
                rec.to_region = next_chart->region;
                rec.lambda_before = chart.lambda;
                rec.lambda_after = next_chart->lambda;
                run.transfer_log.push_back(rec);

                ++impact_count;
                bool zeno = false;
                std::string detail;
                if (impact_count > tol.max_impacts) {
                    zeno = true;
                    detail = "impact count exceeded max_impacts";
                }
                if (!zeno && std::isfinite(last_impact_t)) {
                    const double gap = t_star - last_impact_t;
                    if (gap < tol.zeno_dt) {
                        zeno = true;
                        detail = "consecutive impacts closer than zeno_dt";
                    } else if (gap < 2.0 * h && gap < prev_gap) {
                        const double r = gap / prev_gap;
                        const double t_acc = t_star + gap * r / (1.0 - r);
                        if (t_acc <= horizon) {
                            std::ostringstream os;
                            os << "contracting impact sequence beneath step resolution "
                               << "(projected accumulation at t=" << t_acc << ")";
                            zeno = true;
                            detail = os.str();
                        }
                    }
                    prev_gap = gap;
                }
                last_impact_t = t_star;

                // Rebuild the dense nodes to stop at the impact row but keep an
                // overhang node past it, so comparisons across slightly
                // different impact times can still evaluate this segment.
                DenseOutput rebuilt;
                for (std::size_t i = 0; i < lifted.t.size(); ++i) {
                    const Vec& qi = lifted.x[i].q;
                    rebuilt.append(lifted.t[i], pack_state(lifted.x[i]),
                                   lift_derivative(chart, qi, field(qi)));
                }
                if (t_next > t_star) {
                    rebuilt.append(t_next, lift_state(q_next, gamma_at(chart, q_next)),
                                   lift_derivative(chart, q_next, f_next));
                }
                lifted.dense = std::move(rebuilt);

                run.base_segments.push_back(std::move(seg));
                run.lifted.segments.push_back(std::move(lifted));

                if (zeno) {
                    run.lifted.termination = Termination::zeno_guard;
                    run.lifted.termination_detail = detail;
                    return run;
                }

                t = t_star;
                qv = q_star;
                chart = *next_chart;
                ended_by_event = true;
                break;
            }

            t = t_next;
            qv = q_next;
            push_row(t, qv);
            ++step_index;
        }

        if (!ended_by_event) {
            run.base_segments.push_back(std::move(seg));
            run.lifted.segments.push_back(std::move(lifted));
            done = true;
        }
    }
    return run;
}

ComparisonReport compare(const HybridTrajectory& a, const HybridTrajectory& b,
                         const Tolerances& tol) {
    const double ta = a.t_end();
    const double tb = b.t_end();
    if (std::abs(ta - tb) > 1e-9 * (1.0 + std::max(std::abs(ta), std::abs(tb)))) {
        throw IncomparableHorizons("trajectories end at different times");
    }

    ComparisonReport rep;
    rep.impact_count_a = static_cast<int>(a.events.size());
    rep.impact_count_b = static_cast<int>(b.events.size());
    rep.impact_count_mismatch = rep.impact_count_a != rep.impact_count_b;

    const std::size_t n_events = std::min(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < n_events; ++i) {
        const double d = std::abs(a.events[i].t - b.events[i].t);
        rep.impact_time_diffs.push_back(d);
        rep.max_impact_time_diff = std::max(rep.max_impact_time_diff, d);
    }

    const std::size_t n_seg = std::min(a.segments.size(), b.segments.size());
    for (std::size_t k = 0; k < n_seg; ++k) {
        const TrajectorySegment& sa = a.segments[k];
        const TrajectorySegment& sb = b.segments[k];
        double sup = 0.0;
        for (std::size_t i = 0; i < sa.t.size(); ++i) {
            Vec xb;
            try {
                xb = sb.dense.eval(sa.t[i]);
            } catch (const Error&) {
                const double clamped = std::clamp(sa.t[i], sb.dense.t_front(), sb.dense.t_back());
                xb = sb.dense.eval(clamped);
            }
            sup = std::max(sup, (pack_state(sa.x[i]) - xb).cwiseAbs().maxCoeff());
        }
        rep.per_segment_sup.push_back(sup);
        rep.sup_discrepancy = std::max(rep.sup_discrepancy, sup);
    }
    (void)tol;
    return rep;
}

} // namespace hybridhj
