#include "mmgp/interp.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>

using namespace mmgp;
using testing_support::grid_mesh;

namespace {

Eigen::Vector3d naive_bary(const TriMesh& m, int t, const Vec2& p) {
  const Vec2 a = m.nodes[m.triangles[t][0]], b = m.nodes[m.triangles[t][1]], c = m.nodes[m.triangles[t][2]];
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const double l1 = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / det;
  const double l2 = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
  return {1.0 - l1 - l2, l1, l2};
}

// Smooth interior-preserving deformation of the unit square.
TriMesh wobble(TriMesh m, double amp) {
  for (auto& p : m.nodes) {
    const double bump = std::sin(std::numbers::pi * p.x()) * std::sin(std::numbers::pi * p.y());
    p += amp * bump * Vec2(1.0, 0.6);
  }
  return m;
}

Points random_points(std::mt19937_64& gen, const BBox& box, int n) {
  std::uniform_real_distribution<double> ux(box.xmin, box.xmax), uy(box.ymin, box.ymax);
  Points out(n);
  for (auto& p : out) p = {ux(gen), uy(gen)};
  return out;
}

}  // namespace

TEST(LocateExact, VerticesAndCentroids) {
  const TriMesh m = grid_mesh(5, 4, {0.0, 1.0, 0.0, 1.0});
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    const Location c = locate_exact(m, m.centroid(t));
    EXPECT_EQ(c.triangle, t);
    EXPECT_NEAR((c.bary - Eigen::Vector3d::Constant(1.0 / 3.0)).norm(), 0.0, 1e-14);
  }
  const Location v = locate_exact(m, m.nodes[7]);
  const Tri& tri = m.triangles[v.triangle];
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(v.bary[k], tri[k] == 7 ? 1.0 : 0.0, 1e-14);
  EXPECT_THROW(locate_exact(m, {1.5, 0.5}), Error);
}

TEST(LocateExact, AgreesWithExhaustiveScan) {
  const TriMesh m = wobble(grid_mesh(12, 9, {0.0, 1.0, 0.0, 1.0}), 0.05);
  m.validate();
  std::mt19937_64 gen(5);
  for (const Vec2& p : random_points(gen, {0.0, 1.0, 0.0, 1.0}, 1000)) {
    int found = -1;
    double best = -1e300;
    for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
      const double q = naive_bary(m, t, p).minCoeff();
      if (q > best) {
        best = q;
        found = t;
      }
    }
    const Location loc = locate_exact(m, p);
    EXPECT_GE(naive_bary(m, loc.triangle, p).minCoeff(), -1e-12);
    if (best > 1e-9) EXPECT_EQ(loc.triangle, found);
  }
}

TEST(LocateFast, InteriorMatchesExact) {
  const TriMesh m = wobble(grid_mesh(20, 20, {0.0, 1.0, 0.0, 1.0}), 0.04);
  std::mt19937_64 gen(9);
  const Points q = random_points(gen, {0.0, 1.0, 0.0, 1.0}, 2000);
  const auto fast = locate_fast(m, q);
  const TriangleLocator exact(m);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Location e = locate_exact(exact, q[i]);
    if (fast[i].triangle != e.triangle) EXPECT_GE(naive_bary(m, fast[i].triangle, q[i]).minCoeff(), -1e-12);
  }
}

TEST(LocateFast, OutsideUsesMaximinWithinRadius) {
  const TriMesh m = grid_mesh(10, 10, {0.0, 1.0, 0.0, 1.0});
  const FastLocateOptions opts;
  const FastLocator loc(m, opts);
  const Points q{{1.05, 0.31}, {-0.02, 0.77}, {0.5, 1.1}, {1.04, -0.03}};
  for (const Vec2& p : q) {
    int best = -1;
    double bmin = -1e300;
    for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
      if ((m.centroid(t) - p).norm() > opts.radius) continue;
      const double v = naive_bary(m, t, p).minCoeff();
      if (v > bmin) {
        bmin = v;
        best = t;
      }
    }
    const Location got = loc.locate(p);
    EXPECT_NEAR(naive_bary(m, got.triangle, p).minCoeff(), bmin, 1e-14);
    EXPECT_EQ(got.triangle, best);
    EXPECT_NEAR(got.bary.sum(), 1.0, 1e-15);
    EXPECT_GE(got.bary.minCoeff(), 0.0);
  }
  try {
    loc.locate({5.0, 5.0});
    FAIL() << "expected NoCandidate";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoCandidate);
  }
}

TEST(TransferFields, ConstantAndAffineAreExact) {
  const TriMesh src = wobble(grid_mesh(15, 12, {0.0, 1.0, 0.0, 1.0}), 0.05);
  Eigen::MatrixXd f(src.nodes.size(), 2);
  for (std::size_t i = 0; i < src.nodes.size(); ++i) f.row(i) << 4.25, 1.5 * src.nodes[i].x() - 0.75 * src.nodes[i].y() + 0.1;
  std::mt19937_64 gen(1);
  const Points dst = random_points(gen, {0.0, 1.0, 0.0, 1.0}, 3000);
  const Eigen::MatrixXd g = transfer_fields(src, f, dst);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    EXPECT_NEAR(g(i, 0), 4.25, 4.0 * std::numeric_limits<double>::epsilon() * 4.25);
    EXPECT_NEAR(g(i, 1), 1.5 * dst[i].x() - 0.75 * dst[i].y() + 0.1, 1e-12);
  }
}

TEST(TransferFields, SmoothRoundTripIsBoundedByInterpolationError) {
  const TriMesh a = grid_mesh(24, 24, {0.0, 1.0, 0.0, 1.0});
  const TriMesh b = wobble(grid_mesh(21, 23, {0.0, 1.0, 0.0, 1.0}), 0.06);
  auto f = [](const Vec2& p) { return std::sin(3.0 * p.x()) * std::cos(2.0 * p.y()); };
  Eigen::MatrixXd fa(a.nodes.size(), 1);
  for (std::size_t i = 0; i < a.nodes.size(); ++i) fa(i, 0) = f(a.nodes[i]);
  const Eigen::MatrixXd fb = transfer_fields(a, fa, b.nodes);
  const Eigen::MatrixXd back = transfer_fields(b, fb, a.nodes);
  double one_way = 0.0, round = 0.0;
  for (std::size_t i = 0; i < b.nodes.size(); ++i) one_way = std::max(one_way, std::abs(fb(i, 0) - f(b.nodes[i])));
  for (std::size_t i = 0; i < a.nodes.size(); ++i) round = std::max(round, std::abs(back(i, 0) - fa(i, 0)));
  EXPECT_GT(one_way, 0.0);
  EXPECT_LT(round, 5.0 * one_way);
}

TEST(TransferSurface, AffineInAbscissaIsExact) {
  const Sample s1 = testing_support::oracle_sample(0.08, 0.02, 0.0, 4e6);
  const Sample s2 = testing_support::oracle_sample(0.13, 0.05, 0.0, 4e6);
  const SurfaceTrace t1 = extract_surface(s1.mesh), t2 = extract_surface(s2.mesh);
  // Field equal to the normalized abscissa, signed by side.
  Eigen::MatrixXd f1 = Eigen::MatrixXd::Zero(s1.mesh.nodes.size(), 1);
  for (Side side : {Side::Intrado, Side::Extrado}) {
    const double sign = side == Side::Intrado ? -1.0 : 1.0;
    for (std::size_t i = 1; i + 1 < t1.side(side).size(); ++i)
      f1(t1.side(side)[i], 0) = sign * t1.abscissa(side)[i] / t1.length(side);
  }
  f1(t1.trailing_edge, 0) = 7.0;
  Eigen::MatrixXd f2 = Eigen::MatrixXd::Constant(s2.mesh.nodes.size(), 1, -99.0);
  transfer_surface(t1, f1, t2, f2);
  for (Side side : {Side::Intrado, Side::Extrado}) {
    const double sign = side == Side::Intrado ? -1.0 : 1.0;
    const auto& idx = t2.side(side);
    EXPECT_NEAR(f2(idx.front(), 0), 0.0, 1e-14);
    EXPECT_NEAR(f2(idx.back(), 0), 7.0, 1e-12);
    for (std::size_t i = 1; i + 2 < idx.size(); ++i) {
      const double u = t2.abscissa(side)[i] / t2.length(side);
      // Exact except in the last source interval, which ends at the special value.
      if (u < t1.abscissa(side)[t1.side(side).size() - 2] / t1.length(side))
        EXPECT_NEAR(f2(idx[i], 0), sign * u, 1e-12);
    }
  }
  for (std::size_t i = 0; i < s2.mesh.nodes.size(); ++i)
    if (!s2.mesh.surface_mask[i]) EXPECT_EQ(f2(i, 0), -99.0);
}
