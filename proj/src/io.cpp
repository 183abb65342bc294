#include "hybridhj/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace hybridhj::io {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string escape_json(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (const char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out;
}

void JsonWriter::separate() {
    if (pending_key_) {
        pending_key_ = false;
        return;
    }
    if (!has_item_.empty()) {
        if (has_item_.back()) out_ += ",";
        has_item_.back() = true;
    }
}

JsonWriter& JsonWriter::begin_object() {
    separate();
    out_ += "{";
    has_item_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::end_object() {
    has_item_.pop_back();
    out_ += "}";
    return *this;
}

JsonWriter& JsonWriter::begin_array() {
    separate();
    out_ += "[";
    has_item_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::end_array() {
    has_item_.pop_back();
    out_ += "]";
    return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
    separate();
    out_ += "\"" + escape_json(k) + "\":";
    pending_key_ = true;
    return *this;
}

JsonWriter& JsonWriter::value(double v) {
    separate();
    out_ += std::isfinite(v) ? fmt17(v) : std::string("null");
    return *this;
}

JsonWriter& JsonWriter::value(int v) {
    separate();
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::value(long long v) {
    separate();
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::value(bool v) {
    separate();
    out_ += v ? "true" : "false";
    return *this;
}

JsonWriter& JsonWriter::value(const std::string& s) {
    separate();
    out_ += "\"" + escape_json(s) + "\"";
    return *this;
}

JsonWriter& JsonWriter::value(const char* s) { return value(std::string(s)); }

JsonWriter& JsonWriter::value(const Vec& v) {
    begin_array();
    for (Eigen::Index i = 0; i < v.size(); ++i) value(v(i));
    return end_array();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw Error("write to '" + path + "' failed");
}

std::string trajectory_csv(const HybridTrajectory& traj, const std::vector<std::string>& coords) {
    std::string out = "t";
    for (const std::string& c : coords) out += "," + c;
    for (const std::string& c : coords) out += ",p_" + c;
    out += ",segment_index\n";
    for (std::size_t si = 0; si < traj.segments.size(); ++si) {
        const TrajectorySegment& seg = traj.segments[si];
        for (std::size_t i = 0; i < seg.t.size(); ++i) {
            out += fmt17(seg.t[i]);
            for (Eigen::Index j = 0; j < seg.x[i].q.size(); ++j) {
                out += "," + fmt17(seg.x[i].q(j));
            }
            for (Eigen::Index j = 0; j < seg.x[i].p.size(); ++j) {
                out += "," + fmt17(seg.x[i].p(j));
            }
            out += "," + std::to_string(si) + "\n";
        }
    }
    return out;
}

namespace {

const char* termination_tag(Termination t) {
    switch (t) {
    case Termination::horizon_reached: return "horizon_reached";
    case Termination::zeno_guard: return "zeno_guard";
    case Termination::error: return "error";
    }
    return "unknown";
}

void phase_point(JsonWriter& w, const PhasePoint& x) {
    w.begin_object();
    w.key("q").value(x.q);
    w.key("p").value(x.p);
    w.end_object();
}

void residual_report(JsonWriter& w, const ResidualReport& rep) {
    w.begin_object();
    w.key("max_residual").value(rep.max_residual);
    w.key("pass_tol").value(rep.pass_tol);
    w.key("passes").value(rep.passes());
    w.key("analytic_jacobians").value(rep.analytic_jacobians);
    w.key("sample_count").value(rep.sample_count);
    w.key("argmax").value(rep.argmax.q);
    w.key("channels").begin_array();
    for (const ResidualChannel& ch : rep.channels) {
        w.begin_object();
        w.key("name").value(ch.name);
        w.key("max").value(ch.max);
        w.key("argmax").value(ch.argmax.q);
        w.key("extra").value(ch.extra);
        w.end_object();
    }
    w.end_array();
    w.end_object();
}

} // namespace

std::string events_json(const HybridTrajectory& traj) {
    JsonWriter w;
    w.begin_object();
    w.key("events").begin_array();
    for (const ImpactEvent& ev : traj.events) {
        w.begin_object();
        w.key("t").value(ev.t);
        w.key("guard_id").value(ev.guard_id);
        w.key("x_minus");
        phase_point(w, ev.x_minus);
        w.key("x_plus");
        phase_point(w, ev.x_plus);
        w.end_object();
    }
    w.end_array();
    w.key("termination").value(termination_tag(traj.termination));
    w.key("termination_detail").value(traj.termination_detail);
    w.end_object();
    return w.str() + "\n";
}

std::string residuals_json(const VerificationOutcome& outcome) {
    JsonWriter w;
    w.begin_object();
    w.key("scenario").value(outcome.scenario);
    w.key("reports").begin_array();
    for (std::size_t i = 0; i < outcome.reports.size(); ++i) {
        w.begin_object();
        w.key("label").value(i < outcome.report_labels.size() ? outcome.report_labels[i] : "");
        w.key("report");
        residual_report(w, outcome.reports[i]);
        w.end_object();
    }
    w.end_array();
    w.key("relatedness").begin_object();
    w.key("defined").value(outcome.relatedness_defined);
    if (!outcome.relatedness_defined) {
        w.key("error").value(outcome.relatedness_error);
    } else {
        w.key("report");
        residual_report(w, outcome.relatedness);
    }
    w.end_object();
    w.key("completeness").begin_object();
    {
        const CompletenessReport& c = outcome.completeness;
        w.key("diffeo_ok").value(c.diffeo_ok);
        w.key("min_abs_det").value(c.min_abs_det);
        w.key("diffeo_tol").value(c.diffeo_tol);
        w.key("argmin_region").value(c.diffeo_argmin.region);
        w.key("argmin_q").value(c.diffeo_argmin.q.q);
        w.key("momentum_coords").begin_array();
        for (const int idx : c.momentum_coords) w.value(idx);
        w.end_array();
        w.key("transfer_defined").value(c.transfer_defined);
        if (!c.transfer_defined) w.key("transfer_error").value(c.transfer_error);
        w.key("transfer_residual").value(c.transfer_residual);
        w.key("pass_tol").value(c.pass_tol);
        w.key("passes").value(c.passes());
    }
    w.end_object();
    w.key("reset_membership_defect").value(outcome.reset_membership_defect);
    w.key("pass").value(outcome.pass);
    w.end_object();
    return w.str() + "\n";
}

std::string comparison_json(const ComparisonReport& report, double compare_tol) {
    JsonWriter w;
    w.begin_object();
    w.key("sup_discrepancy").value(report.sup_discrepancy);
    w.key("compare_tol").value(compare_tol);
    w.key("pass").value(report.sup_discrepancy <= compare_tol && !report.impact_count_mismatch);
    w.key("impact_count_a").value(report.impact_count_a);
    w.key("impact_count_b").value(report.impact_count_b);
    w.key("impact_count_mismatch").value(report.impact_count_mismatch);
    w.key("max_impact_time_diff").value(report.max_impact_time_diff);
    w.key("per_segment_sup").begin_array();
    for (const double s : report.per_segment_sup) w.value(s);
    w.end_array();
    w.key("impact_time_diffs").begin_array();
    for (const double s : report.impact_time_diffs) w.value(s);
    w.end_array();
    w.end_object();
    return w.str() + "\n";
}

std::string transfer_log_json(const ReconstructionRun& run) {
    JsonWriter w;
    w.begin_object();
    w.key("transfers").begin_array();
    for (const TransferRecord& rec : run.transfer_log) {
        w.begin_object();
        w.key("t").value(rec.t);
        w.key("guard_id").value(rec.guard_id);
        w.key("from_region").value(rec.from_region);
        w.key("to_region").value(rec.to_region);
        w.key("lambda_before").value(rec.lambda_before);
        w.key("lambda_after").value(rec.lambda_after);
        w.end_object();
    }
    w.end_array();
    w.key("termination").value(termination_tag(run.lifted.termination));
    w.end_object();
    return w.str() + "\n";
}

std::string base_trajectory_csv(const ReconstructionRun& run,
                                const std::vector<std::string>& coords) {
    std::string out = "t";
    for (const std::string& c : coords) out += "," + c;
    out += ",region_id\n";
    for (const BaseSegment& seg : run.base_segments) {
        for (std::size_t i = 0; i < seg.t.size(); ++i) {
            out += fmt17(seg.t[i]);
            for (Eigen::Index j = 0; j < seg.q[i].q.size(); ++j) {
                out += "," + fmt17(seg.q[i].q(j));
            }
            out += "," + std::to_string(seg.region_id) + "\n";
        }
    }
    return out;
}

} // namespace hybridhj::io
