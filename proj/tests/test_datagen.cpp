#include "mmgp/datagen.hpp"
#include "mmgp/features.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace mmgp;

namespace {

constexpr double kNu = 1.56e-5;
constexpr double kDeg = std::numbers::pi / 180.0;

// Lift coefficient from the surface pressure, trapezoidal in arc length.
double lift_from_pressure(const AirfoilCase& cs, int n) {
  const Points s = joukowski_surface(cs, n);
  const auto flow = solve_potential_flow(cs, s);
  Vec2 force = Vec2::Zero();
  for (int k = 0; k < n; ++k) {
    const int j = (k + 1) % n;
    const Vec2 d = s[j] - s[k];
    const Vec2 outward(d.y(), -d.x());
    force -= 0.5 * (flow[k].p + flow[j].p) * outward;
  }
  const Vec2 lift_dir(-std::sin(cs.alpha), std::cos(cs.alpha));
  return force.dot(lift_dir) / (0.5 * cs.speed * cs.speed * cs.chord);
}

}  // namespace

TEST(Joukowski, FlatPlateLift) {
  for (double a : {-4.0, 2.0, 7.5}) {
    const AirfoilCase cs = AirfoilCase::joukowski(0.0, 0.0, a * kDeg, 4e6, kNu);
    EXPECT_NEAR(cs.chord, 1.0, 1e-9);
    EXPECT_NEAR(forces(cs).cl, 2.0 * std::numbers::pi * std::sin(a * kDeg), 1e-8);
  }
}

TEST(Joukowski, SymmetricSectionMirrorsAndHasNoLiftAtZeroIncidence) {
  const AirfoilCase cs = AirfoilCase::joukowski(0.1, 0.0, 0.0, 4e6, kNu);
  const int n = 128;
  const Points s = joukowski_surface(cs, n);
  ASSERT_EQ(static_cast<int>(s.size()), n);
  EXPECT_GT(polygon_signed_area(s), 0.0);
  for (int j = 1; j < n; ++j) EXPECT_NEAR((s[j] - Vec2(s[n - j].x(), -s[n - j].y())).norm(), 0.0, 1e-9) << j;
  EXPECT_EQ(forces(cs).cl, 0.0);
  EXPECT_NEAR(lift_from_pressure(cs, 4096), 0.0, 1e-6);
}

TEST(Joukowski, FarFieldAndStagnation) {
  const AirfoilCase cs = AirfoilCase::joukowski(0.12, 0.04, 6.0 * kDeg, 3.5e6, kNu);
  const FlowState far = solve_potential_flow(cs, Vec2(2000.0, -1500.0));
  EXPECT_NEAR(far.ux / cs.speed, std::cos(cs.alpha), 1e-3);
  EXPECT_NEAR(far.uy / cs.speed, std::sin(cs.alpha), 1e-3);
  EXPECT_NEAR(far.p / (cs.speed * cs.speed), 0.0, 1e-3);

  const FlowState st = solve_potential_flow(cs, stagnation_point(cs));
  EXPECT_NEAR(std::hypot(st.ux, st.uy) / cs.speed, 0.0, 1e-7);
  EXPECT_NEAR(st.p, 0.5 * cs.speed * cs.speed, 1e-9 * cs.speed * cs.speed);
  EXPECT_THROW(solve_potential_flow(cs, cs.offset), Error);
}

TEST(Joukowski, KuttaLiftMatchesPressureIntegral) {
  for (const auto& [eps, eta, a] : {std::tuple{0.1, 0.03, 5.0}, {0.07, 0.0, -3.0}, {0.13, 0.06, 9.0}}) {
    const AirfoilCase cs = AirfoilCase::joukowski(eps, eta, a * kDeg, 4e6, kNu);
    const double cl = forces(cs).cl;
    EXPECT_NEAR(lift_from_pressure(cs, 4096), cl, 0.01 * std::abs(cl)) << eps << " " << eta << " " << a;
  }
}

TEST(Joukowski, DragProxyFallsWithReynolds) {
  double prev = 1e300;
  for (double re : {2e6, 3e6, 4e6, 5e6, 6e6}) {
    const double cd = forces(AirfoilCase::joukowski(0.1, 0.02, 3.0 * kDeg, re, kNu)).cd;
    EXPECT_GT(cd, 0.0);
    EXPECT_LT(cd, prev);
    prev = cd;
  }
}

TEST(Joukowski, RejectsFoldingCircle) {
  try {
    AirfoilCase::joukowski(-0.05, 0.0, 0.0, 4e6, kNu);
    FAIL() << "expected SelfIntersection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SelfIntersection);
  }
  EXPECT_THROW(AirfoilCase::joukowski(0.1, 0.0, 0.0, -1.0, kNu), Error);
}

TEST(OracleSample, WallFieldsAndTurbulentViscosity) {
  const Sample s = testing_support::oracle_sample(0.11, 0.03, 4.0, 4.2e6);
  s.mesh.validate();
  const auto n = static_cast<Eigen::Index>(s.mesh.nodes.size());
  ASSERT_EQ(s.fields.rows(), n);
  ASSERT_EQ(s.fields.cols(), kFieldCount);
  EXPECT_EQ(s.info.reynolds, 4.2e6);
  EXPECT_NEAR(s.info.speed * s.info.chord / kNu, 4.2e6, 1e-3);

  const SurfaceTrace tr = extract_surface(s.mesh);
  const SurfaceDistance sd = surface_distance(s.mesh, tr);
  const double dmax = *std::max_element(sd.distance.begin(), sd.distance.end());
  int wall = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.mesh.surface_mask[i]) {
      ++wall;
      EXPECT_EQ(s.fields(i, Ux), 0.0);
      EXPECT_EQ(s.fields(i, Uy), 0.0);
      EXPECT_GT(s.fields(i, NuT), 0.0);
    }
    if (sd.distance[i] > 0.1 * dmax) EXPECT_EQ(s.fields(i, NuT), 0.0);
    EXPECT_GE(s.fields(i, NuT), 0.0);
  }
  EXPECT_EQ(wall, testing_support::small_config().mesh.n_surface);

  // Away from the wall the stored velocity is the potential solution.
  const AirfoilCase cs = AirfoilCase::joukowski(0.11, 0.03, 4.0 * kDeg, 4.2e6, kNu);
  const double delta = boundary_layer_thickness(4.2e6);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sd.distance[i] < 10.0 * delta) continue;
    const FlowState f = solve_potential_flow(cs, s.mesh.nodes[i]);
    EXPECT_NEAR(s.fields(i, Ux), f.ux, 1e-6 * cs.speed);
    EXPECT_NEAR(s.fields(i, Pressure), f.p, 1e-9 * cs.speed * cs.speed);
  }
}

TEST(DrawCase, RangesPerSplit) {
  const DatasetConfig cfg;
  int low = 0, high = 0;
  for (int i = 0; i < 2000; ++i) {
    const CaseDraw in = draw_case(sample_seed(cfg.seed, "train", i), false, cfg);
    EXPECT_GE(in.reynolds, cfg.re_min);
    EXPECT_LE(in.reynolds, cfg.re_max);
    EXPECT_GE(in.eps, cfg.eps_min);
    EXPECT_LE(in.eps, cfg.eps_max);
    EXPECT_GE(in.alpha, cfg.alpha_min_deg * kDeg);
    EXPECT_LE(in.alpha, cfg.alpha_max_deg * kDeg);
    const CaseDraw o = draw_case(sample_seed(cfg.seed, "ood", i), true, cfg);
    EXPECT_TRUE(o.reynolds < cfg.re_min || o.reynolds > cfg.re_max) << o.reynolds;
    EXPECT_GE(o.reynolds, cfg.ood_low_min);
    EXPECT_LE(o.reynolds, cfg.ood_high_max);
    (o.reynolds < cfg.re_min ? low : high)++;
  }
  EXPECT_GT(low, 500);
  EXPECT_GT(high, 500);
  EXPECT_NE(sample_seed(7, "train", 0), sample_seed(7, "test", 0));
  EXPECT_NE(sample_seed(7, "train", 0), sample_seed(7, "train", 1));
}

TEST(GenerateDataset, CountsLayoutAndDeterminism) {
  DatasetConfig cfg = testing_support::small_config();
  cfg.n_train = 3;
  cfg.n_test = 2;
  cfg.n_ood = 2;
  testing_support::TempDir a("gen_a"), b("gen_b");
  const DatasetReport r = generate_dataset(cfg, a.path());
  generate_dataset(cfg, b.path());
  EXPECT_EQ(r.samples, 7);
  EXPECT_EQ(r.oracle_seconds.size(), 7u);
  EXPECT_EQ(read_split(a.path(), "train").size(), 3u);
  EXPECT_EQ(read_split(a.path(), "test").size(), 2u);
  const auto ood = read_split(a.path(), "ood");
  ASSERT_EQ(ood.size(), 2u);
  for (const auto& s : ood) {
    EXPECT_EQ(s.info.split, "ood");
    EXPECT_TRUE(s.info.reynolds < cfg.re_min || s.info.reynolds > cfg.re_max);
    EXPECT_EQ(s.info.reference_time_s, cfg.reference_time_s);
  }
  const auto index = read_json(a.path() / "dataset.json");
  EXPECT_EQ(index.at("splits").at("train").size(), 3u);
  EXPECT_EQ(hash_tree(a.path()), hash_tree(b.path()));
}

TEST(DatasetConfig, ParsesKeysAndRejectsBadRanges) {
  const auto kv = KeyValueConfig::parse("[dataset]\ntrain = 5\nseed = 99\n[mesh]\nn_surface = 64 # comment\n");
  const DatasetConfig c = DatasetConfig::from_config(kv);
  EXPECT_EQ(c.n_train, 5);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.mesh.n_surface, 64);
  EXPECT_EQ(c.n_test, 20);
  EXPECT_THROW(DatasetConfig::from_config(KeyValueConfig::parse("dataset.re_min = 1e6\n")), Error);
  EXPECT_THROW(DatasetConfig::from_config(KeyValueConfig::parse("dataset.ood = 0\n")), Error);
}
