#pragma once

#include "mmgp/core.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmgp {

enum class Direction { Min, Max };

struct Threshold {
  double t1 = 0.0;
  double t2 = 0.0;
  Direction direction = Direction::Min;
};

/// Quantity keys: u_x u_y p nu_t p_s C_D C_L rho_D rho_L.
const std::vector<std::string>& field_quantities();    // u_x u_y p nu_t p_s
const std::vector<std::string>& physics_quantities();  // C_D C_L rho_D rho_L

struct ThresholdTable {
  std::map<std::string, Threshold> rows;
  bool ties_to_better = true;

  static ThresholdTable defaults();
  static ThresholdTable from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  const Threshold& at(const std::string& q) const;
};

struct SpearmanResult {
  double value = 0.0;
  bool zero_variance = false;
};
SpearmanResult spearman(std::span<const double> a, std::span<const double> b);
std::vector<double> average_ranks(std::span<const double> v);

struct RelativeError {
  double value = 0.0;
  int excluded = 0;  // samples with zero truth
};
RelativeError mean_relative_error(std::span<const double> pred, std::span<const double> truth);

/// ||pred - truth|| / ||truth||; zero when both vanish.
double relative_l2(std::span<const double> pred, std::span<const double> truth);

int color_points(double value, const Threshold& t, bool ties_to_better = true);
const char* color_name(int points);

double accuracy_score(int nr, int no, int ng);

enum class SpeedupMode { Inference, InferenceAndEval };

struct Speedup {
  double speedup = 0.0;
  double score = 0.0;
};
Speedup speedup_score(double solver_time, double inference_time, double evaluation_time, double speedup_max,
                      SpeedupMode mode = SpeedupMode::Inference);

struct ScoreWeights {
  double ml = 0.4;
  double ood = 0.3;
  double physics = 0.3;
  double accuracy = 0.75;
  double speed = 0.25;
  double speedup_max = 1e4;
  double max_training_hours = 72.0;
  int subscore_decimals = 3;  // leaderboard rounding of subscores; negative disables
  SpeedupMode speedup_mode = SpeedupMode::Inference;
};

struct Timings {
  double solver_time = 0.0;
  double inference_time = 0.0;
  double evaluation_time = 0.0;
  std::optional<double> ood_inference_time;
  double training_time_s = 0.0;
};

struct ScoreInputs {
  std::map<std::string, double> ml;       // field quantities on the test split
  std::map<std::string, double> physics;  // physics quantities on the test split
  std::optional<std::map<std::string, double>> ood;  // all nine quantities
  Timings timings;
};

struct MetricRow {
  std::string quantity;
  double value = 0.0;
  int points = 0;
};

struct CategoryCard {
  bool present = true;
  std::vector<MetricRow> rows;
  int nr = 0, no = 0, ng = 0;
  double accuracy = 0.0;
  double speedup = 0.0;
  double speed_score = 0.0;
  double score = 0.0;
  double score_rounded = 0.0;
};

struct ScoreCard {
  CategoryCard ml;
  CategoryCard physics;
  CategoryCard ood;
  double global = 0.0;        // percent, from rounded subscores
  double global_exact = 0.0;  // percent, from unrounded subscores
  bool rejected = false;
  std::vector<std::string> warnings;
  Timings timings;
  ScoreWeights weights;

  nlohmann::json to_json() const;
  static ScoreCard from_json(const nlohmann::json& j);
};

ScoreCard category_and_global(const ScoreInputs& in, const ThresholdTable& table = ThresholdTable::defaults(),
                              const ScoreWeights& w = {});

std::string render_report(const ScoreCard& card);

double round_to(double v, int decimals);

}  // namespace mmgp
