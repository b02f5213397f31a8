#pragma once

#include "mmgp/datagen.hpp"
#include "mmgp/gp.hpp"
#include "mmgp/interp.hpp"
#include "mmgp/io.hpp"
#include "mmgp/morph.hpp"
#include "mmgp/reduce.hpp"
#include "mmgp/scoring.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace mmgp {

struct PipelineConfig {
  int shape_modes = 16;
  int velocity_modes = 13;
  int pressure_modes = 24;
  int nut_modes = 12;
  double outlier_k = 5.0;
  bool surface_features = false;  // append surface_feature_summary to the GP inputs
  int wake_stations = 16;
  int threads = 0;  // 0: hardware concurrency
  BBox bbox{-2.0, 4.0, -1.5, 1.5};
  GpTrainConfig gp;
  GpTrainConfig wake_gp;
  MorphOptions morph;
  ExtendOptions extend;
  FastLocateOptions locate;

  static PipelineConfig from_config(const KeyValueConfig& kv);
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

/// Runs fn(0..n-1) on a small thread pool. Each index must write only its own
/// output slot. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

struct OutlierReport {
  std::vector<int> kept;
  std::vector<int> rejected;
  std::vector<double> score;  // max robust z over (C_L, C_D), per sample
};

/// Robust z-score (median and 1.4826 MAD) on lift and drag; samples above k are rejected.
OutlierReport flag_outliers(std::span<const double> cl, std::span<const double> cd, double k = 5.0);

/// Coefficients of the surface pressure force. The loop runs counter-clockwise
/// around the body; the trapezoidal rule is applied edge by edge.
Forces surface_forces(const Points& loop, std::span<const double> pressure, double alpha, double speed, double chord);
Forces surface_forces(const TriMesh& mesh, const SurfaceTrace& trace, std::span<const double> pressure, double alpha,
                      double speed);

struct FieldGroup {
  std::string name;
  std::vector<int> columns;  // field columns stacked into one snapshot
  bool velocity_inputs = false;
  PodBasis pod;
  std::vector<GpModel> gps;  // one per POD coefficient
};

struct MmgpModel {
  PipelineConfig config;
  TriMesh common;
  SurfaceTrace common_trace;
  PodBasis shape;
  std::vector<FieldGroup> groups;  // velocity, pressure, nu_t
  GpModel wake;
  bool reynolds_input = false;
  std::string dataset_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> rejected_ids;
  std::map<std::string, double> reconstruction_error;  // per field, mean over training samples

  const FieldGroup& group(const std::string& name) const;
  int scalar_input_count() const;
};

struct StageTimes {
  double pretreat = 0.0;
  double morph = 0.0;
  double project = 0.0;
  double gp = 0.0;
  double reconstruct = 0.0;
  double inverse = 0.0;
  double total() const { return pretreat + morph + project + gp + reconstruct + inverse; }
};

struct TrainReport {
  OutlierReport outliers;
  double seconds = 0.0;
};

MmgpModel train_mmgp(const std::vector<Sample>& train, const PipelineConfig& cfg, TrainReport* report = nullptr);

struct QueryCase {
  double alpha = 0.0;
  double speed = 0.0;
  double reynolds = 0.0;
};

struct Prediction {
  Eigen::MatrixXd fields;  // nodes x kFieldCount, on the query mesh
  Forces forces;
  double wake_angle = 0.0;
  StageTimes times;
};

Prediction predict_mmgp(const MmgpModel& model, const TriMesh& mesh, const QueryCase& q);
inline QueryCase query_of(const SampleInfo& s) { return {s.alpha, s.speed, s.reynolds}; }

/// The nine benchmark quantities for one split.
struct SplitMetrics {
  std::map<std::string, double> values;
  int zero_truth_excluded = 0;
  bool lift_zero_variance = false;
  bool drag_zero_variance = false;
};

SplitMetrics split_metrics(const std::vector<Sample>& truth, const std::vector<Eigen::MatrixXd>& fields,
                           std::span<const double> cl, std::span<const double> cd);

void save_model(const MmgpModel& model, const fs::path& dir);
MmgpModel load_model(const fs::path& dir);

}  // namespace mmgp
