#include "mmgp/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace mmgp {

const std::vector<std::string>& field_quantities() {
  static const std::vector<std::string> q{"u_x", "u_y", "p", "nu_t", "p_s"};
  return q;
}

const std::vector<std::string>& physics_quantities() {
  static const std::vector<std::string> q{"C_D", "C_L", "rho_D", "rho_L"};
  return q;
}

ThresholdTable ThresholdTable::defaults() {
  ThresholdTable t;
  t.rows = {
      {"u_x", {0.1, 0.2, Direction::Min}},    {"u_y", {0.1, 0.2, Direction::Min}},
      {"p", {0.02, 0.1, Direction::Min}},     {"nu_t", {0.5, 1.0, Direction::Min}},
      {"p_s", {0.08, 0.2, Direction::Min}},   {"C_D", {1.0, 10.0, Direction::Min}},
      {"C_L", {0.2, 0.5, Direction::Min}},    {"rho_D", {0.5, 0.8, Direction::Max}},
      {"rho_L", {0.94, 0.98, Direction::Max}},
  };
  return t;
}

const Threshold& ThresholdTable::at(const std::string& q) const {
  auto it = rows.find(q);
  if (it == rows.end()) throw Error(Errc::MissingMetric, "no threshold for " + q);
  return it->second;
}

ThresholdTable ThresholdTable::from_json(const nlohmann::json& j) {
  ThresholdTable t = defaults();
  if (j.contains("ties_to_better")) t.ties_to_better = j.at("ties_to_better").get<bool>();
  const nlohmann::json& rows = j.contains("thresholds") ? j.at("thresholds") : j;
  for (auto it = rows.begin(); it != rows.end(); ++it) {
    if (!it.value().is_object()) continue;
    Threshold th;
    th.t1 = it.value().at("T1").get<double>();
    th.t2 = it.value().at("T2").get<double>();
    const auto dir = it.value().value("direction", std::string("min"));
    if (dir != "min" && dir != "max") throw Error(Errc::Format, "direction must be min or max");
    th.direction = dir == "max" ? Direction::Max : Direction::Min;
    if (!(th.t1 < th.t2)) throw Error(Errc::InvalidArgument, "threshold T1 must be below T2 for " + it.key());
    t.rows[it.key()] = th;
  }
  return t;
}

nlohmann::json ThresholdTable::to_json() const {
  nlohmann::json j;
  j["ties_to_better"] = ties_to_better;
  for (const auto& [k, v] : rows)
    j["thresholds"][k] = {{"T1", v.t1}, {"T2", v.t2}, {"direction", v.direction == Direction::Max ? "max" : "min"}};
  return j;
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

SpearmanResult spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "spearman inputs differ in length");
  if (a.size() < 2) throw Error(Errc::LengthMismatch, "spearman needs at least two values");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return {0.0, true};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

RelativeError mean_relative_error(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw Error(Errc::LengthMismatch, "relative error inputs differ in length");
  RelativeError r;
  double acc = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == 0.0) {
      ++r.excluded;
      continue;
    }
    acc += std::abs(pred[i] - truth[i]) / std::abs(truth[i]);
    ++used;
  }
  r.value = used ? acc / used : 0.0;
  return r;
}

double relative_l2(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw Error(Errc::LengthMismatch, "field lengths differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    num += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    den += truth[i] * truth[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::sqrt(num);
  return std::sqrt(num / den);
}

int color_points(double v, const Threshold& t, bool ties_to_better) {
  if (t.direction == Direction::Min) {
    if (ties_to_better) return v <= t.t1 ? 2 : (v <= t.t2 ? 1 : 0);
    return v < t.t1 ? 2 : (v < t.t2 ? 1 : 0);
  }
  if (ties_to_better) return v >= t.t2 ? 2 : (v >= t.t1 ? 1 : 0);
  return v > t.t2 ? 2 : (v > t.t1 ? 1 : 0);
}

const char* color_name(int points) {
  switch (points) {
    case 2: return "green";
    case 1: return "orange";
    default: return "red";
  }
}

double accuracy_score(int nr, int no, int ng) {
  if (nr < 0 || no < 0 || ng < 0) throw Error(Errc::InvalidArgument, "negative tally");
  const int n = nr + no + ng;
  if (n == 0) throw Error(Errc::EmptyCategory, "category has no metrics");
  return (2.0 * ng + no) / (2.0 * n);
}

Speedup speedup_score(double solver_time, double inference_time, double evaluation_time, double speedup_max,
                      SpeedupMode mode) {
  if (!(solver_time > 0.0) || !(inference_time > 0.0) || !(evaluation_time > 0.0))
    throw Error(Errc::NonPositiveTime, "times must be positive");
  Speedup s;
  s.speedup = mode == SpeedupMode::Inference ? solver_time / inference_time
                                             : (solver_time + evaluation_time) / (inference_time + evaluation_time);
  s.score = s.speedup < 1.0 ? 0.0 : std::min(std::log10(s.speedup) / std::log10(speedup_max), 1.0);
  return s;
}

double round_to(double v, int decimals) {
  if (decimals < 0) return v;
  const double f = std::pow(10.0, decimals);
  return std::round(v * f) / f;
}

namespace {

CategoryCard tally(const std::map<std::string, double>& values, const std::vector<std::string>& keys,
                   const ThresholdTable& table, const std::string& category) {
  CategoryCard c;
  for (const auto& k : keys) {
    auto it = values.find(k);
    if (it == values.end()) throw Error(Errc::MissingMetric, category + " metric " + k + " is missing");
    const int pts = color_points(it->second, table.at(k), table.ties_to_better);
    c.rows.push_back({k, it->second, pts});
    (pts == 2 ? c.ng : pts == 1 ? c.no : c.nr)++;
  }
  c.accuracy = accuracy_score(c.nr, c.no, c.ng);
  return c;
}

}  // namespace

ScoreCard category_and_global(const ScoreInputs& in, const ThresholdTable& table, const ScoreWeights& w) {
  ScoreCard card;
  card.timings = in.timings;
  card.weights = w;
  const Timings& t = in.timings;

  const Speedup sp = speedup_score(t.solver_time, t.inference_time, t.evaluation_time, w.speedup_max, w.speedup_mode);
  card.ml = tally(in.ml, field_quantities(), table, "ML");
  card.ml.speedup = sp.speedup;
  card.ml.speed_score = sp.score;
  card.ml.score = w.accuracy * card.ml.accuracy + w.speed * sp.score;

  card.physics = tally(in.physics, physics_quantities(), table, "Physics");
  card.physics.score = card.physics.accuracy;

  if (in.ood) {
    std::vector<std::string> keys = field_quantities();
    keys.insert(keys.end(), physics_quantities().begin(), physics_quantities().end());
    card.ood = tally(*in.ood, keys, table, "OOD");
    const Speedup so = t.ood_inference_time
                           ? speedup_score(t.solver_time, *t.ood_inference_time, t.evaluation_time, w.speedup_max,
                                           w.speedup_mode)
                           : sp;
    card.ood.speedup = so.speedup;
    card.ood.speed_score = so.score;
    card.ood.score = w.accuracy * card.ood.accuracy + w.speed * so.score;
  } else {
    card.ood.present = false;
    card.warnings.push_back("OOD category absent; global score uses renormalized ML and Physics weights");
  }

  for (CategoryCard* c : {&card.ml, &card.physics, &card.ood}) c->score_rounded = round_to(c->score, w.subscore_decimals);

  auto combine = [&](bool rounded) {
    auto s = [&](const CategoryCard& c) { return rounded ? c.score_rounded : c.score; };
    if (card.ood.present) return 100.0 * (w.ml * s(card.ml) + w.ood * s(card.ood) + w.physics * s(card.physics));
    return 100.0 * (w.ml * s(card.ml) + w.physics * s(card.physics)) / (w.ml + w.physics);
  };
  card.global_exact = combine(false);
  card.global = combine(true);
  if (t.training_time_s > w.max_training_hours * 3600.0) {
    card.rejected = true;
    card.global = 0.0;
    card.global_exact = 0.0;
    card.warnings.push_back("training time exceeds the limit; submission rejected");
  }
  return card;
}

namespace {

nlohmann::json category_json(const CategoryCard& c) {
  nlohmann::json j;
  j["present"] = c.present;
  j["metrics"] = nlohmann::json::array();
  for (const auto& r : c.rows)
    j["metrics"].push_back({{"quantity", r.quantity}, {"value", r.value}, {"points", r.points}, {"color", color_name(r.points)}});
  j["Nr"] = c.nr;
  j["No"] = c.no;
  j["Ng"] = c.ng;
  j["accuracy"] = c.accuracy;
  j["speedup"] = c.speedup;
  j["speed_score"] = c.speed_score;
  j["score"] = c.score;
  j["score_rounded"] = c.score_rounded;
  return j;
}

CategoryCard category_from_json(const nlohmann::json& j) {
  CategoryCard c;
  c.present = j.at("present").get<bool>();
  for (const auto& m : j.at("metrics"))
    c.rows.push_back({m.at("quantity").get<std::string>(), m.at("value").get<double>(), m.at("points").get<int>()});
  c.nr = j.at("Nr").get<int>();
  c.no = j.at("No").get<int>();
  c.ng = j.at("Ng").get<int>();
  c.accuracy = j.at("accuracy").get<double>();
  c.speedup = j.at("speedup").get<double>();
  c.speed_score = j.at("speed_score").get<double>();
  c.score = j.at("score").get<double>();
  c.score_rounded = j.at("score_rounded").get<double>();
  return c;
}

}  // namespace

nlohmann::json ScoreCard::to_json() const {
  nlohmann::json j;
  j["ML"] = category_json(ml);
  j["Physics"] = category_json(physics);
  j["OOD"] = category_json(ood);
  j["global_score"] = global;
  j["global_score_exact"] = global_exact;
  j["rejected"] = rejected;
  j["warnings"] = warnings;
  j["timings"] = {{"solver_time_s", timings.solver_time},
                  {"inference_time_s", timings.inference_time},
                  {"evaluation_time_s", timings.evaluation_time},
                  {"training_time_s", timings.training_time_s}};
  if (timings.ood_inference_time) j["timings"]["ood_inference_time_s"] = *timings.ood_inference_time;
  j["weights"] = {{"alpha_ML", weights.ml},
                  {"alpha_OOD", weights.ood},
                  {"alpha_Physics", weights.physics},
                  {"alpha_A", weights.accuracy},
                  {"alpha_S", weights.speed},
                  {"speedup_max", weights.speedup_max},
                  {"max_training_hours", weights.max_training_hours},
                  {"subscore_decimals", weights.subscore_decimals},
                  {"speedup_mode", weights.speedup_mode == SpeedupMode::Inference ? "inference" : "inference+eval"}};
  return j;
}

ScoreCard ScoreCard::from_json(const nlohmann::json& j) {
  ScoreCard c;
  c.ml = category_from_json(j.at("ML"));
  c.physics = category_from_json(j.at("Physics"));
  c.ood = category_from_json(j.at("OOD"));
  c.global = j.at("global_score").get<double>();
  c.global_exact = j.at("global_score_exact").get<double>();
  c.rejected = j.at("rejected").get<bool>();
  c.warnings = j.at("warnings").get<std::vector<std::string>>();
  const auto& t = j.at("timings");
  c.timings.solver_time = t.at("solver_time_s").get<double>();
  c.timings.inference_time = t.at("inference_time_s").get<double>();
  c.timings.evaluation_time = t.at("evaluation_time_s").get<double>();
  c.timings.training_time_s = t.at("training_time_s").get<double>();
  if (t.contains("ood_inference_time_s")) c.timings.ood_inference_time = t.at("ood_inference_time_s").get<double>();
  const auto& w = j.at("weights");
  c.weights.ml = w.at("alpha_ML").get<double>();
  c.weights.ood = w.at("alpha_OOD").get<double>();
  c.weights.physics = w.at("alpha_Physics").get<double>();
  c.weights.accuracy = w.at("alpha_A").get<double>();
  c.weights.speed = w.at("alpha_S").get<double>();
  c.weights.speedup_max = w.at("speedup_max").get<double>();
  c.weights.max_training_hours = w.at("max_training_hours").get<double>();
  c.weights.subscore_decimals = w.at("subscore_decimals").get<int>();
  c.weights.speedup_mode =
      w.at("speedup_mode").get<std::string>() == "inference" ? SpeedupMode::Inference : SpeedupMode::InferenceAndEval;
  return c;
}

std::string render_report(const ScoreCard& card) {
  std::ostringstream os;
  char buf[160];
  auto category = [&](const char* name, const CategoryCard& c) {
    if (!c.present) {
      os << name << ": absent\n";
      return;
    }
    os << name << "\n";
    for (const auto& r : c.rows) {
      std::snprintf(buf, sizeof buf, "  %-6s %14.6f  %-6s %d\n", r.quantity.c_str(), r.value, color_name(r.points), r.points);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "  Nr=%d No=%d Ng=%d  accuracy=%.6f", c.nr, c.no, c.ng, c.accuracy);
    os << buf;
    if (c.speedup > 0.0) {
      std::snprintf(buf, sizeof buf, "  speedup=%.3f speed_score=%.6f", c.speedup, c.speed_score);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "\n  score=%.6f (%.3f)\n", c.score, c.score_rounded);
    os << buf;
  };
  category("ML", card.ml);
  category("Physics", card.physics);
  category("OOD", card.ood);
  for (const auto& w : card.warnings) os << "WARNING: " << w << "\n";
  std::snprintf(buf, sizeof buf, "Global Score: %.2f\nGlobal Score (unrounded subscores): %.6f\n", card.global,
                card.global_exact);
  os << buf;
  return os.str();
}

}  // namespace mmgp
