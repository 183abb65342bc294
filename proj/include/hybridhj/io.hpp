// Deterministic text output: 17-significant-digit numeric formatting, a
// small ordered JSON writer, and the CSV/JSON exporters for trajectories,
// events, residual reports, comparisons, and transfer logs.
#pragma once

#include <string>
#include <vector>

#include "hybridhj/reconstruct.hpp"

namespace hybridhj::io {

// Shortest fixed-contract rendering: printf "%.17g". All numeric output in
// files goes through this so identical runs produce identical bytes.
std::string fmt17(double v);

// Insertion-ordered JSON document builder. Only what the exporters need:
// objects, arrays, strings, bools, ints, and fmt17-rendered doubles.
class JsonWriter {
public:
    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(const std::string& k);
    JsonWriter& value(double v);
    JsonWriter& value(int v);
    JsonWriter& value(long long v);
    JsonWriter& value(bool v);
    JsonWriter& value(const std::string& s);
    JsonWriter& value(const char* s);
    JsonWriter& value(const Vec& v);
    std::string str() const { return out_; }

private:
    void separate();
    std::string out_;
    std::vector<bool> has_item_;
    bool pending_key_ = false;
};

std::string escape_json(const std::string& s);

void write_file(const std::string& path, const std::string& content);

// trajectory.csv: header t,<coords>,p_<coords>,segment_index; one row per
// stored sample (both event-side states appear, with their segment index).
std::string trajectory_csv(const HybridTrajectory& traj, const std::vector<std::string>& coords);

// events.json sidecar: t, guard_id, x_minus, x_plus per impact, plus the
// termination tag.
std::string events_json(const HybridTrajectory& traj);

// residuals.json: per-channel max, argmax location, sample count, tolerances,
// relatedness and completeness blocks.
struct VerificationOutcome {
    std::string scenario;
    std::vector<ResidualReport> reports;      // one per parameter value
    std::vector<std::string> report_labels;   // matching lambda rendering
    ResidualReport relatedness;
    bool relatedness_defined = true;
    std::string relatedness_error;
    CompletenessReport completeness;
    double reset_membership_defect = 0.0;     // informational, constrained models
    bool pass = false;
};
std::string residuals_json(const VerificationOutcome& outcome);

std::string comparison_json(const ComparisonReport& report, double compare_tol);

std::string transfer_log_json(const ReconstructionRun& run);

// Base trajectory of a reconstruction (region ids instead of momenta).
std::string base_trajectory_csv(const ReconstructionRun& run,
                                const std::vector<std::string>& coords);

} // namespace hybridhj::io
