#include "mmgp/commands.hpp"

#include <chrono>
#include <cstdio>

namespace mmgp {

namespace {

KeyValueConfig load_config(const fs::path& file) { return file.empty() ? KeyValueConfig{} : KeyValueConfig::load(file); }

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvalidArgument, what);
}

std::map<std::string, double> metric_map(const nlohmann::json& j) {
  std::map<std::string, double> m;
  for (auto it = j.begin(); it != j.end(); ++it) m[it.key()] = it.value().get<double>();
  return m;
}

nlohmann::json split_metrics_json(const SplitMetrics& m) {
  return {{"metrics", m.values},
          {"zero_truth_excluded", m.zero_truth_excluded},
          {"lift_zero_variance", m.lift_zero_variance},
          {"drag_zero_variance", m.drag_zero_variance}};
}

}  // namespace

Timings timings_from_json(const nlohmann::json& j, Timings base) {
  try {
    if (j.contains("solver_time_s")) base.solver_time = j.at("solver_time_s").get<double>();
    if (j.contains("inference_time_s")) base.inference_time = j.at("inference_time_s").get<double>();
    if (j.contains("evaluation_time_s")) base.evaluation_time = j.at("evaluation_time_s").get<double>();
    if (j.contains("training_time_s")) base.training_time_s = j.at("training_time_s").get<double>();
    if (j.contains("ood_inference_time_s")) base.ood_inference_time = j.at("ood_inference_time_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("malformed timings: ") + e.what());
  }
  return base;
}

ScoreInputs score_inputs_from_json(const nlohmann::json& j) {
  try {
    ScoreInputs in;
    in.ml = metric_map(j.at("ml"));
    in.physics = metric_map(j.at("physics"));
    if (j.contains("ood") && !j.at("ood").is_null()) in.ood = metric_map(j.at("ood"));
    if (j.contains("timings")) in.timings = timings_from_json(j.at("timings"));
    return in;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("malformed metrics file: ") + e.what());
  }
}

ScoreWeights score_weights_from(const KeyValueConfig& kv) {
  ScoreWeights w;
  w.ml = kv.get("score.alpha_ml", w.ml);
  w.ood = kv.get("score.alpha_ood", w.ood);
  w.physics = kv.get("score.alpha_physics", w.physics);
  w.accuracy = kv.get("score.alpha_accuracy", w.accuracy);
  w.speed = kv.get("score.alpha_speed", w.speed);
  w.speedup_max = kv.get("score.speedup_max", w.speedup_max);
  w.max_training_hours = kv.get("score.max_training_hours", w.max_training_hours);
  w.subscore_decimals = kv.get("score.subscore_decimals", w.subscore_decimals);
  return w;
}

DatasetReport run_gen(const GenOptions& o) {
  require(!o.out.empty(), "gen needs --out");
  DatasetConfig cfg = DatasetConfig::from_config(load_config(o.config));
  if (o.seed) cfg.seed = *o.seed;
  DatasetReport report = generate_dataset(cfg, o.out);
  if (!o.timing_out.empty()) write_json(o.timing_out, {{"oracle_seconds", report.oracle_seconds}});
  return report;
}

MmgpModel run_train(const TrainOptions& o) {
  require(!o.data.empty() && !o.out.empty(), "train needs --data and --out");
  const KeyValueConfig kv = load_config(o.config);
  const PipelineConfig cfg = PipelineConfig::from_config(kv);
  const std::vector<Sample> train = read_split(o.data, "train");
  if (train.empty()) throw Error(Errc::EmptyCategory, "no training samples under " + o.data.string());
  TrainReport report;
  MmgpModel model = train_mmgp(train, cfg, &report);
  model.dataset_hash = hex64(hash_tree(o.data / "train"));
  model.seed = o.seed.value_or(kv.get_u64("dataset.seed", 0));
  save_model(model, o.out);
  if (!o.timing_out.empty()) {
    nlohmann::json scores = nlohmann::json::object();
    for (std::size_t i = 0; i < train.size(); ++i) scores[train[i].info.id] = report.outliers.score[i];
    write_json(o.timing_out, {{"training_time_s", report.seconds}, {"outlier_scores", scores}});
  }
  return model;
}

void run_predict(const PredictOptions& o) {
  require(!o.model.empty() && !o.data.empty() && !o.out.empty(), "predict needs --model, --data and --out");
  const MmgpModel model = load_model(o.model);
  nlohmann::json index{{"schema_version", kSchemaVersion}, {"model_hash", hex64(hash_tree(o.model))}};
  nlohmann::json timing = nlohmann::json::object();
  for (const auto& split : o.splits) {
    const std::vector<Sample> samples = read_split(o.data, split);
    std::vector<Prediction> preds(samples.size());
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(samples.size(), [&](std::size_t i) {
      try {
        preds[i] = predict_mmgp(model, samples[i].mesh, query_of(samples[i].info));
      } catch (const Error& e) {
        throw Error(e.code(), split + "/" + samples[i].info.id + ": " + e.what());
      }
    }, model.config.threads);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json rows = nlohmann::json::array();
    StageTimes totals;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      write_fields_csv(o.out / split / samples[i].info.id / "fields.csv", preds[i].fields);
      rows.push_back({{"id", samples[i].info.id},
                      {"C_L", preds[i].forces.cl},
                      {"C_D", preds[i].forces.cd},
                      {"wake_angle", preds[i].wake_angle}});
      const StageTimes& t = preds[i].times;
      totals.pretreat += t.pretreat;
      totals.morph += t.morph;
      totals.project += t.project;
      totals.gp += t.gp;
      totals.reconstruct += t.reconstruct;
      totals.inverse += t.inverse;
    }
    index["splits"][split] = rows;
    if (!samples.empty()) {
      const double per_sample = totals.total() / static_cast<double>(samples.size());
      timing[split] = {{"samples", samples.size()},
                       {"instrumented_total_s", totals.total()},
                       {"wall_s", wall},
                       {"per_sample_s", per_sample},
                       {"stages_s",
                        {{"pretreat", totals.pretreat},
                         {"morph", totals.morph},
                         {"project", totals.project},
                         {"gp", totals.gp},
                         {"reconstruct", totals.reconstruct},
                         {"inverse_transfer", totals.inverse}}}};
      if (split == "test") timing["inference_time_s"] = per_sample;
      if (split == "ood") timing["ood_inference_time_s"] = per_sample;
    }
  }
  write_json(o.out / "predictions.json", index);
  if (!o.timing_out.empty()) write_json(o.timing_out, timing);
}

ScoreCard run_score(const ScoreOptions& o) {
  require(!o.out.empty(), "score needs --out");
  const KeyValueConfig kv = load_config(o.config);
  ScoreWeights weights = score_weights_from(kv);
  if (o.speedup_mode == "inference") weights.speedup_mode = SpeedupMode::Inference;
  else if (o.speedup_mode == "inference+eval") weights.speedup_mode = SpeedupMode::InferenceAndEval;
  else throw Error(Errc::InvalidArgument, "speedup mode must be inference or inference+eval");
  const ThresholdTable table = o.thresholds.empty() ? ThresholdTable::defaults()
                                                    : ThresholdTable::from_json(read_json(o.thresholds));

  ScoreInputs in;
  nlohmann::json details = nlohmann::json::object();
  const auto t_eval = std::chrono::steady_clock::now();
  if (!o.metrics.empty()) {
    in = score_inputs_from_json(read_json(o.metrics));
  } else {
    require(!o.data.empty() && !o.predictions.empty(), "score needs --data and --predictions, or --metrics");
    const nlohmann::json index = read_json(o.predictions / "predictions.json");
    double solver = 0.0;
    bool has_ood = false;
    for (const std::string split : {"test", "ood"}) {
      const std::vector<Sample> truth = read_split(o.data, split);
      if (truth.empty()) {
        if (split == "test") throw Error(Errc::EmptyCategory, "test split is empty");
        continue;
      }
      if (!index.contains("splits") || !index.at("splits").contains(split))
        throw Error(Errc::MissingMetric, "predictions missing for split " + split);
      const auto& rows = index.at("splits").at(split);
      if (rows.size() != truth.size()) throw Error(Errc::LengthMismatch, "prediction count differs for " + split);
      std::vector<Eigen::MatrixXd> fields;
      std::vector<double> cl, cd;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& row = rows.at(i);
        if (row.at("id").get<std::string>() != truth[i].info.id)
          throw Error(Errc::Format, "prediction order differs from dataset order in " + split);
        fields.push_back(read_fields_csv(o.predictions / split / truth[i].info.id / "fields.csv", kFieldCount));
        cl.push_back(row.at("C_L").get<double>());
        cd.push_back(row.at("C_D").get<double>());
      }
      const SplitMetrics m = split_metrics(truth, fields, cl, cd);
      details[split] = split_metrics_json(m);
      if (split == "test") {
        for (const auto& q : field_quantities()) in.ml[q] = m.values.at(q);
        for (const auto& q : physics_quantities()) in.physics[q] = m.values.at(q);
        for (const auto& s : truth) solver += s.info.reference_time_s;
        solver /= static_cast<double>(truth.size());
      } else {
        in.ood = m.values;
        has_ood = true;
      }
    }
    in.timings.solver_time = solver;
    if (!has_ood) in.ood.reset();
  }
  // Evaluation time defaults to the measured metric computation.
  if (!(in.timings.evaluation_time > 0.0))
    in.timings.evaluation_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_eval).count();
  if (!o.time_override.empty()) in.timings = timings_from_json(read_json(o.time_override), in.timings);
  if (!(in.timings.inference_time > 0.0))
    throw Error(Errc::NonPositiveTime, "no inference time available; pass --time-override with inference_time_s");

  ScoreCard card = category_and_global(in, table, weights);
  nlohmann::json j = card.to_json();
  j["schema_version"] = kSchemaVersion;
  j["thresholds"] = table.to_json();
  if (!details.empty()) j["splits"] = details;
  write_json(o.out, j);
  return card;
}

std::string run_report(const ReportOptions& o) {
  require(!o.score.empty(), "report needs --score");
  const std::string text = render_report(ScoreCard::from_json(read_json(o.score)));
  if (!o.out.empty()) write_text(o.out, text);
  return text;
}

int exit_code_for(const Error& e) { return is_numeric_failure(e.code()) ? 3 : 2; }

}  // namespace mmgp
