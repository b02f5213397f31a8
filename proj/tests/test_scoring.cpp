#include "mmgp/scoring.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mmgp;

namespace {

ScoreInputs table_four() {
  ScoreInputs in;
  in.ml = {{"u_x", 0.208965}, {"u_y", 0.144508}, {"p", 0.193066}, {"nu_t", 0.277285}, {"p_s", 0.425576}};
  in.physics = {{"C_D", 16.345740}, {"C_L", 0.365903}, {"rho_D", -0.043079}, {"rho_L", 0.957070}};
  in.ood = std::map<std::string, double>{{"u_x", 0.322766},   {"u_y", 0.199635},   {"p", 0.333169},
                                         {"nu_t", 0.431288},  {"p_s", 0.805426},   {"C_D", 21.793367},
                                         {"C_L", 0.711271},   {"rho_D", -0.043979}, {"rho_L", 0.917206}};
  in.timings.solver_time = 1500.0;
  in.timings.inference_time = 2.0;
  in.timings.evaluation_time = 1.0;
  return in;
}

// Pearson correlation of the given vectors, written out directly.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / a.size();
    mb += b[i] / b.size();
  }
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(ColorPoints, ReferenceTableColors) {
  const ScoreCard card = category_and_global(table_four());
  const std::map<std::string, int> ml{{"u_x", 0}, {"u_y", 1}, {"p", 0}, {"nu_t", 2}, {"p_s", 0}};
  const std::map<std::string, int> phys{{"C_D", 0}, {"C_L", 1}, {"rho_D", 0}, {"rho_L", 1}};
  const std::map<std::string, int> ood{{"u_x", 0}, {"u_y", 1},   {"p", 0},     {"nu_t", 2}, {"p_s", 0},
                                       {"C_D", 0}, {"C_L", 0},   {"rho_D", 0}, {"rho_L", 0}};
  int checked = 0;
  for (const auto& r : card.ml.rows) {
    EXPECT_EQ(r.points, ml.at(r.quantity)) << r.quantity;
    ++checked;
  }
  for (const auto& r : card.physics.rows) {
    EXPECT_EQ(r.points, phys.at(r.quantity)) << r.quantity;
    ++checked;
  }
  for (const auto& r : card.ood.rows) {
    EXPECT_EQ(r.points, ood.at(r.quantity)) << r.quantity;
    ++checked;
  }
  EXPECT_EQ(checked, 18);
}

TEST(ColorPoints, BoundariesAndDirection) {
  const Threshold lo{0.1, 0.2, Direction::Min}, hi{0.94, 0.98, Direction::Max};
  EXPECT_EQ(color_points(0.1, lo), 2);
  EXPECT_EQ(color_points(0.1, lo, false), 1);
  EXPECT_EQ(color_points(0.2, lo), 1);
  EXPECT_EQ(color_points(0.2, lo, false), 0);
  EXPECT_EQ(color_points(0.98, hi), 2);
  EXPECT_EQ(color_points(0.97, hi), 1);
  EXPECT_EQ(color_points(0.939, hi), 0);
  EXPECT_STREQ(color_name(2), "green");
  EXPECT_STREQ(color_name(1), "orange");
  EXPECT_STREQ(color_name(0), "red");
}

TEST(AccuracyScore, KnownTallies) {
  EXPECT_DOUBLE_EQ(accuracy_score(3, 1, 1), 0.3);
  EXPECT_DOUBLE_EQ(accuracy_score(7, 1, 1), 3.0 / 18.0);
  EXPECT_DOUBLE_EQ(accuracy_score(0, 0, 4), 1.0);
  EXPECT_DOUBLE_EQ(accuracy_score(4, 0, 0), 0.0);
  EXPECT_THROW(accuracy_score(0, 0, 0), Error);
}

TEST(SpeedupScore, LogScaleAndClamping) {
  const Speedup s = speedup_score(1500.0, 2.0, 1.0, 1e4);
  EXPECT_DOUBLE_EQ(s.speedup, 750.0);
  EXPECT_NEAR(s.score, 0.718765, 1e-6);
  EXPECT_EQ(speedup_score(1.0, 2.0, 1.0, 1e4).score, 0.0);
  EXPECT_EQ(speedup_score(1e6, 1.0, 1.0, 1e4).score, 1.0);
  const Speedup e = speedup_score(1500.0, 2.0, 3.0, 1e4, SpeedupMode::InferenceAndEval);
  EXPECT_DOUBLE_EQ(e.speedup, 1503.0 / 5.0);
  try {
    speedup_score(1500.0, 0.0, 1.0, 1e4);
    FAIL() << "expected NonPositiveTime";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::NonPositiveTime);
  }
}

TEST(Spearman, TiesPerfectAndDegenerate) {
  const std::vector<double> a{1, 2, 2, 3}, b{4, 5, 6, 7};
  EXPECT_EQ(average_ranks(a), (std::vector<double>{1.0, 2.5, 2.5, 4.0}));
  EXPECT_NEAR(spearman(a, b).value, pearson({1.0, 2.5, 2.5, 4.0}, {1, 2, 3, 4}), 1e-15);
  EXPECT_DOUBLE_EQ(spearman(b, b).value, 1.0);
  const std::vector<double> rev{7, 6, 5, 4};
  EXPECT_DOUBLE_EQ(spearman(b, rev).value, -1.0);
  const std::vector<double> flat{3, 3, 3, 3};
  EXPECT_TRUE(spearman(flat, b).zero_variance);
  EXPECT_THROW(spearman(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
  EXPECT_THROW(spearman(a, std::vector<double>{1, 2, 3}), Error);
}

TEST(Spearman, InvariantUnderMonotoneMaps) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(40), y(40), ex(40), cy(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = n(gen);
    y[i] = x[i] + 0.5 * n(gen);
    ex[i] = std::exp(x[i]);
    cy[i] = y[i] * y[i] * y[i];
  }
  EXPECT_NEAR(spearman(x, y).value, spearman(ex, cy).value, 1e-15);
}

TEST(MeanRelativeError, ScaledAndZeroTruth) {
  const std::vector<double> t{1.0, -2.0, 4.0}, p{1.1, -2.2, 4.4};
  EXPECT_NEAR(mean_relative_error(p, t).value, 0.1, 1e-15);
  const std::vector<double> t0{0.0, 2.0}, p0{5.0, 3.0};
  const RelativeError r = mean_relative_error(p0, t0);
  EXPECT_EQ(r.excluded, 1);
  EXPECT_DOUBLE_EQ(r.value, 0.5);
  EXPECT_DOUBLE_EQ(relative_l2(std::vector<double>{3.0, 4.0}, std::vector<double>{0.0, 0.0}), 5.0);
  EXPECT_DOUBLE_EQ(relative_l2(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 0.0}), 1.0);
}

TEST(GlobalScore, ReproducesReferenceSubmission) {
  const ScoreCard card = category_and_global(table_four());
  EXPECT_NEAR(card.ml.score_rounded, 0.405, 5e-4);
  EXPECT_NEAR(card.ood.score_rounded, 0.305, 5e-4);
  EXPECT_NEAR(card.physics.score_rounded, 0.25, 5e-4);
  EXPECT_NEAR(card.global, 32.85, 0.01);
  EXPECT_EQ(card.ml.nr, 3);
  EXPECT_EQ(card.ood.nr, 7);
  const std::string rep = render_report(card);
  EXPECT_NE(rep.find("Global Score: 32.85"), std::string::npos) << rep;
  EXPECT_TRUE(card.warnings.empty());
}

TEST(GlobalScore, AllGreenWithMaxSpeedupIsHundred) {
  ScoreInputs in;
  in.ml = {{"u_x", 0.0}, {"u_y", 0.0}, {"p", 0.0}, {"nu_t", 0.0}, {"p_s", 0.0}};
  in.physics = {{"C_D", 0.0}, {"C_L", 0.0}, {"rho_D", 1.0}, {"rho_L", 1.0}};
  auto all = in.ml;
  all.insert(in.physics.begin(), in.physics.end());
  in.ood = all;
  in.timings = {1e5, 1.0, 1.0, std::nullopt, 0.0};
  EXPECT_DOUBLE_EQ(category_and_global(in).global, 100.0);
}

TEST(GlobalScore, MissingOodRenormalizesWeights) {
  ScoreInputs in = table_four();
  in.ood.reset();
  const ScoreCard card = category_and_global(in);
  EXPECT_FALSE(card.ood.present);
  ASSERT_EQ(card.warnings.size(), 1u);
  EXPECT_NEAR(card.global, 100.0 * (0.4 * 0.405 + 0.3 * 0.25) / 0.7, 1e-9);
  EXPECT_NE(render_report(card).find("OOD: absent"), std::string::npos);
}

TEST(GlobalScore, RejectsOverlongTrainingAndMissingMetric) {
  ScoreInputs in = table_four();
  in.timings.training_time_s = 73.0 * 3600.0;
  const ScoreCard card = category_and_global(in);
  EXPECT_TRUE(card.rejected);
  EXPECT_EQ(card.global, 0.0);

  ScoreInputs miss = table_four();
  miss.physics.erase("C_L");
  try {
    category_and_global(miss);
    FAIL() << "expected MissingMetric";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingMetric);
  }
}

TEST(ScoreCard, JsonRoundTrip) {
  ScoreInputs in = table_four();
  in.timings.ood_inference_time = 3.0;
  const ScoreCard a = category_and_global(in);
  const ScoreCard b = ScoreCard::from_json(a.to_json());
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(render_report(a), render_report(b));
}

TEST(ThresholdTable, JsonOverridesAndValidation) {
  const ThresholdTable d = ThresholdTable::defaults();
  EXPECT_EQ(ThresholdTable::from_json(d.to_json()).to_json(), d.to_json());
  const auto t = ThresholdTable::from_json(nlohmann::json::parse(R"({"p": {"T1": 0.05, "T2": 0.3}})"));
  EXPECT_EQ(t.at("p").t1, 0.05);
  EXPECT_EQ(t.at("u_x").t2, 0.2);
  EXPECT_THROW(ThresholdTable::from_json(nlohmann::json::parse(R"({"p": {"T1": 0.3, "T2": 0.1}})")), Error);
  EXPECT_THROW(d.at("nope"), Error);
}

TEST(RoundTo, Decimals) {
  EXPECT_DOUBLE_EQ(round_to(0.40469, 3), 0.405);
  EXPECT_DOUBLE_EQ(round_to(0.30469, 3), 0.305);
  EXPECT_DOUBLE_EQ(round_to(0.123456, -1), 0.123456);
}
