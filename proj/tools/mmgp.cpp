#include "mmgp/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Mesh-morphing Gaussian-process surrogate toolkit"};
  app.require_subcommand(1);

  mmgp::GenOptions gen;
  std::uint64_t gen_seed = 0;
  auto* g = app.add_subcommand("gen", "Generate the potential-flow oracle dataset");
  g->add_option("--config", gen.config, "key = value configuration file")->check(CLI::ExistingFile);
  auto* gen_seed_opt = g->add_option("--seed", gen_seed, "Global dataset seed");
  g->add_option("--out", gen.out, "Output dataset directory")->required();
  g->add_option("--timing-out", gen.timing_out, "Write measured oracle times to this JSON file");

  mmgp::TrainOptions train;
  std::uint64_t train_seed = 0;
  auto* t = app.add_subcommand("train", "Train an MMGP model on the train split");
  t->add_option("--config", train.config, "key = value configuration file")->check(CLI::ExistingFile);
  auto* train_seed_opt = t->add_option("--seed", train_seed, "Seed recorded in the model provenance");
  t->add_option("--data", train.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--out", train.out, "Output model directory")->required();
  t->add_option("--timing-out", train.timing_out, "Write training time and outlier scores to this JSON file");

  mmgp::PredictOptions predict;
  auto* p = app.add_subcommand("predict", "Predict fields and forces for dataset splits");
  p->add_option("--model", predict.model, "Model directory")->required()->check(CLI::ExistingDirectory);
  p->add_option("--data", predict.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  p->add_option("--out", predict.out, "Output predictions directory")->required();
  p->add_option("--splits", predict.splits, "Splits to predict")->capture_default_str();
  p->add_option("--timing-out", predict.timing_out, "Write inference timings to this JSON file");

  mmgp::ScoreOptions score;
  auto* s = app.add_subcommand("score", "Compute the benchmark score card");
  s->add_option("--config", score.config, "key = value configuration file")->check(CLI::ExistingFile);
  s->add_option("--data", score.data, "Dataset directory")->check(CLI::ExistingDirectory);
  s->add_option("--predictions", score.predictions, "Predictions directory")->check(CLI::ExistingDirectory);
  s->add_option("--metrics", score.metrics, "Score supplied metric values instead of predictions")
      ->check(CLI::ExistingFile);
  s->add_option("--time-override", score.time_override, "JSON timings overriding measured or dataset values")
      ->check(CLI::ExistingFile);
  s->add_option("--thresholds", score.thresholds, "Threshold table JSON")->check(CLI::ExistingFile);
  s->add_option("--speedup-mode", score.speedup_mode, "inference or inference+eval")
      ->check(CLI::IsMember({"inference", "inference+eval"}))
      ->capture_default_str();
  s->add_option("--out", score.out, "Output score.json")->required();

  mmgp::ReportOptions report;
  auto* r = app.add_subcommand("report", "Render a plain-text report from score.json");
  r->add_option("--score", report.score, "score.json")->required()->check(CLI::ExistingFile);
  r->add_option("--out", report.out, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*g) {
      if (*gen_seed_opt) gen.seed = gen_seed;
      const auto rep = mmgp::run_gen(gen);
      std::printf("generated %d samples in %s\n", rep.samples, gen.out.string().c_str());
    } else if (*t) {
      if (*train_seed_opt) train.seed = train_seed;
      const auto model = mmgp::run_train(train);
      std::printf("trained on %zu samples (%zu rejected); shape modes %d\n", model.train_ids.size(),
                  model.rejected_ids.size(), model.shape.rank());
    } else if (*p) {
      mmgp::run_predict(predict);
      std::printf("predictions written to %s\n", predict.out.string().c_str());
    } else if (*s) {
      const auto card = mmgp::run_score(score);
      std::printf("Global Score: %.2f\n", card.global);
    } else if (*r) {
      const std::string text = mmgp::run_report(report);
      if (report.out.empty()) std::cout << text;
    }
  } catch (const mmgp::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return mmgp::exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
