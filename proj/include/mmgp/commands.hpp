#pragma once

#include "mmgp/pipeline.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mmgp {

// Entry points behind `mmgp gen|train|predict|score|report`. They throw
// mmgp::Error; exit_code_for maps it to the process status.

struct GenOptions {
  fs::path config;  // optional key = value file
  std::optional<std::uint64_t> seed;
  fs::path out;
  fs::path timing_out;  // measured oracle times, written only when set
};

struct TrainOptions {
  fs::path config;
  std::optional<std::uint64_t> seed;
  fs::path data;
  fs::path out;
  fs::path timing_out;  // training wall time, written only when set
};

struct PredictOptions {
  fs::path model;
  fs::path data;
  fs::path out;
  std::vector<std::string> splits{"test", "ood"};
  fs::path timing_out;  // per-split inference time, written only when set
};

struct ScoreOptions {
  fs::path data;
  fs::path predictions;
  fs::path out;
  fs::path config;
  fs::path time_override;  // JSON timings; these win over dataset defaults
  fs::path thresholds;
  fs::path metrics;  // metric injection: score supplied values instead of predictions
  std::string speedup_mode = "inference";
};

struct ReportOptions {
  fs::path score;
  fs::path out;  // stdout when empty
};

DatasetReport run_gen(const GenOptions& o);
MmgpModel run_train(const TrainOptions& o);
void run_predict(const PredictOptions& o);
ScoreCard run_score(const ScoreOptions& o);
std::string run_report(const ReportOptions& o);

/// Score inputs from a metrics file holding "ml", "physics", optional "ood"
/// maps and an optional "timings" object.
ScoreInputs score_inputs_from_json(const nlohmann::json& j);
Timings timings_from_json(const nlohmann::json& j, Timings base = {});
ScoreWeights score_weights_from(const KeyValueConfig& kv);

int exit_code_for(const Error& e);

}  // namespace mmgp
