#include "mmgp/features.hpp"
#include "mmgp/rng.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mmgp;

namespace {

// P_l(x) = 2^-l sum_k (-1)^k C(l,k) C(2l-2k,l) x^(l-2k)
double legendre_explicit(int l, double x) {
  auto binom = [](int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  double s = 0.0;
  for (int k = 0; 2 * k <= l; ++k) s += (k % 2 ? -1.0 : 1.0) * binom(l, k) * binom(2 * l - 2 * k, l) * std::pow(x, l - 2 * k);
  return s / std::pow(2.0, l);
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST(Canonicalize, ThreeFourFive) {
  const Vec2 v(3.0, 4.0);
  const Vec2 r = canonicalize(v, v);
  EXPECT_EQ(r.x(), 5.0);
  EXPECT_EQ(r.y(), 0.0);
  EXPECT_EQ(canonical_rotation({2.0, 0.0}), Eigen::Matrix2d::Identity());
  try {
    canonicalize(Vec2::Zero(), v);
    FAIL() << "expected ZeroVelocity";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroVelocity);
  }
}

TEST(Canonicalize, RotationIsOrthogonalAndAligns) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const Vec2 v(n(gen), n(gen)), x(n(gen), n(gen));
    const Eigen::Matrix2d R = canonical_rotation(v);
    EXPECT_NEAR((R.transpose() * R - Eigen::Matrix2d::Identity()).norm(), 0.0, 1e-14);
    EXPECT_NEAR((R * v - Vec2(v.norm(), 0.0)).norm(), 0.0, 1e-12 * v.norm());
    EXPECT_NEAR(canonicalize(v, x).norm(), x.norm(), 1e-12 * x.norm());
  }
}

TEST(LogPressure, RoundTripAndClosedForms) {
  EXPECT_EQ(log_pressure(0.0), 0.0);
  EXPECT_NEAR(log_pressure(std::exp(1.0) - 1.0), 1.0, 1e-15);
  EXPECT_NEAR(log_pressure(-(std::exp(2.0) - 1.0)), -2.0, 1e-15);
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(-1e5, 1e5);
  for (int k = 0; k < 1000; ++k) {
    const double p = u(gen);
    EXPECT_NEAR(inv_log_pressure(log_pressure(p)), p, 1e-10 * std::abs(p));
  }
}

TEST(BoundaryLayerMask, WallThresholdAndMidLayer) {
  const double tau = 0.25;
  const std::vector<double> d{0.0, 0.5, 0.75, 1.0, 2.0, 0.1};
  const auto m = boundary_layer_mask(d, tau);
  const double dmax = 2.0;
  EXPECT_EQ(m[0], 1.0);
  EXPECT_EQ(m[4], 0.0);
  // dhat = 0.75 = 1 - tau exactly at d = 0.5.
  EXPECT_EQ(m[1], 0.0);
  EXPECT_EQ(m[2], 0.0);
  const double dhat = (dmax - 0.1) / dmax;  // 0.95
  const double theta = (dhat - (1.0 - tau)) / (1.0 - (1.0 - tau));
  EXPECT_NEAR(m[5], theta * theta, 1e-15);
  for (double v : m) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(boundary_layer_mask(d, 0.0), Error);
}

TEST(BoundaryLayerMask, SupportIsExactlyTheLayer) {
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> d(500);
  for (auto& x : d) x = u(gen);
  d[0] = 0.0;
  const double dmax = *std::max_element(d.begin(), d.end());
  const auto m = boundary_layer_mask(d, 0.1);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(m[i] > 0.0, (dmax - d[i]) / dmax > 0.9) << d[i];
}

TEST(VolumetricNormals, DirectionMatchesNearestSurfacePoint) {
  const Sample s = testing_support::oracle_sample(0.11, 0.04, 4.0, 4e6);
  const SurfaceTrace tr = extract_surface(s.mesh);
  const Points loop = tr.loop_points();
  TriMesh m = s.mesh;
  m.triangles.clear();
  std::mt19937_64 gen(15);
  std::uniform_real_distribution<double> ux(-2.0, 4.0), uy(-1.5, 1.5);
  const std::size_t first = m.nodes.size();
  while (m.nodes.size() < first + 1000) {
    const Vec2 p(ux(gen), uy(gen));
    if (point_in_polygon(loop, p)) continue;
    m.nodes.push_back(p);
    m.surface_mask.push_back(0);
  }
  const Points vn = volumetric_normals(m, tr);

  std::vector<double> dist(m.nodes.size());
  Points closest(m.nodes.size());
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    double best = 1e300;
    for (std::size_t e = 0; e < loop.size(); ++e) {
      const Vec2 a = loop[e], b = loop[(e + 1) % loop.size()];
      const double t = std::clamp((m.nodes[i] - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
      const Vec2 c = a + t * (b - a);
      if ((c - m.nodes[i]).norm() < best) {
        best = (c - m.nodes[i]).norm();
        closest[i] = c;
      }
    }
    dist[i] = best;
  }
  const double dmax = *std::max_element(dist.begin(), dist.end());
  for (std::size_t i = first; i < m.nodes.size(); ++i) {
    const double fade = 1.0 - dist[i] / dmax;
    EXPECT_NEAR(vn[i].norm(), fade, 1e-12);
    if (fade > 1e-6) {
      const Vec2 dir = (closest[i] - m.nodes[i]) / dist[i];
      EXPECT_NEAR((vn[i] / vn[i].norm() - dir).norm(), 0.0, 1e-12);
    }
  }
  // Surface nodes: unit length, pointing into the body.
  for (std::size_t k = 0; k < tr.loop.size(); ++k) {
    const int v = tr.loop[k];
    EXPECT_NEAR(vn[v].norm(), 1.0, 1e-12);
    if (v != tr.trailing_edge) {
      EXPECT_TRUE(point_in_polygon(loop, m.nodes[v] + 1e-4 * vn[v])) << v;
      continue;
    }
    // The cusp is thinner than any fixed step; require the direction to lie inside the wedge.
    const Vec2 a = (loop[(k + 1) % loop.size()] - m.nodes[v]).normalized();
    const Vec2 b = (loop[(k + loop.size() - 1) % loop.size()] - m.nodes[v]).normalized();
    const auto cross = [](const Vec2& p, const Vec2& q) { return p.x() * q.y() - p.y() * q.x(); };
    EXPECT_GT(cross(a, vn[v]) * cross(vn[v], b), 0.0);
    EXPECT_GT(vn[v].dot(a + b), 0.0);
  }
}

TEST(RandomFourierFeatures, ZeroInputDeterminismAndIdentity) {
  const std::vector<double> scales{0.5, 1.0, 1.5};
  const int count = 16;
  const Points zero{Vec2::Zero()};
  const Eigen::MatrixXd f0 = random_fourier_features(zero, scales, count, 42);
  ASSERT_EQ(f0.cols(), 2 * count * 3);
  for (int s = 0; s < 3; ++s)
    for (int r = 0; r < count; ++r) {
      EXPECT_EQ(f0(0, s * 2 * count + r), 0.0);
      EXPECT_EQ(f0(0, s * 2 * count + count + r), 1.0);
    }
  std::mt19937_64 gen(16);
  std::normal_distribution<double> n(0.0, 1.0);
  Points pts(50);
  for (auto& p : pts) p = {n(gen), n(gen)};
  const Eigen::MatrixXd a = random_fourier_features(pts, scales, count, 42);
  const Eigen::MatrixXd b = random_fourier_features(pts, scales, count, 42);
  EXPECT_EQ(a, b);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (int s = 0; s < 3; ++s)
      for (int r = 0; r < count; ++r) {
        const double sn = a(i, s * 2 * count + r), cs = a(i, s * 2 * count + count + r);
        EXPECT_NEAR(sn * sn + cs * cs, 1.0, 1e-12);
      }

  // Frequencies re-drawn from the documented generator.
  SplitMix64 rng(42);
  for (int s = 0; s < 3; ++s)
    for (int r = 0; r < count; ++r) {
      const double bx = scales[s] * rng.normal(), by = scales[s] * rng.normal();
      const double arg = 2.0 * std::numbers::pi * (bx * pts[0].x() + by * pts[0].y());
      EXPECT_NEAR(a(0, s * 2 * count + r), std::sin(arg), 1e-12);
    }
}

TEST(SinusoidalEmbedding, MatchesFormula) {
  const double s = 0.01, L = 6.0;
  const int nb = 8;
  const Eigen::VectorXd z = sinusoidal_embedding(0.0, s, L, nb);
  for (int i = 0; i < nb; ++i) {
    EXPECT_EQ(z[2 * i], 0.0);
    EXPECT_EQ(z[2 * i + 1], 1.0);
  }
  const double d = 4.0 * L / (s * std::numbers::pi);
  std::mt19937_64 gen(18);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    const double x = u(gen);
    const Eigen::VectorXd e = sinusoidal_embedding(x, s, L, nb);
    EXPECT_EQ(e[0], std::sin(x / s));
    EXPECT_EQ(e[1], std::cos(x / s));
    for (int i = 0; i < nb; ++i) {
      const double w = std::exp(-std::log(d) * i / nb) / s;
      EXPECT_NEAR(e[2 * i], std::sin(w * x), 1e-12);
      EXPECT_NEAR(e[2 * i + 1], std::cos(w * x), 1e-12);
    }
  }
}

TEST(SphericalEmbedding, MatchesExplicitLegendre) {
  const int nb = 8;
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (bool fact : {true, false})
    for (int k = 0; k < 100; ++k) {
      const double th = u(gen);
      const Eigen::VectorXd e = spherical_embedding(th, nb, fact);
      const Eigen::VectorXd m = spherical_embedding(-th, nb, fact);
      for (int l = 1; l <= nb; ++l) {
        const double norm = std::sqrt((fact ? factorial(2 * l + 1) : 2.0 * l + 1.0) / (4.0 * std::numbers::pi));
        const double y = norm * legendre_explicit(l, std::cos(th));
        const double yo = norm * legendre_explicit(l, std::sin(th));
        EXPECT_NEAR(e[2 * (l - 1)], y, 1e-12 * std::max(1.0, norm));
        EXPECT_NEAR(e[2 * (l - 1) + 1], yo, 1e-12 * std::max(1.0, norm));
        EXPECT_NEAR(m[2 * (l - 1)], e[2 * (l - 1)], 1e-12 * std::max(1.0, norm));
        EXPECT_NEAR(m[2 * (l - 1) + 1], norm * legendre_explicit(l, -std::sin(th)), 1e-12 * std::max(1.0, norm));
      }
    }
  EXPECT_NEAR(spherical_embedding(0.3, 1)[0], std::sqrt(6.0 / (4.0 * std::numbers::pi)) * std::cos(0.3), 1e-15);
}

TEST(CoordFeatures, EdgeOriginsAndAxisAngles) {
  const Sample s = testing_support::oracle_sample(0.1, 0.02, 0.0, 4e6);
  const SurfaceTrace tr = extract_surface(s.mesh);
  const auto f = trailing_coords_and_angles(s.mesh, tr);
  EXPECT_EQ(f[tr.trailing_edge].trailing, Vec2::Zero());
  EXPECT_EQ(f[tr.leading_edge].leading, Vec2::Zero());
  EXPECT_EQ(f[tr.trailing_edge].trailing_distance, 0.0);

  // Rotate by minus each axis angle, then take atan2.
  std::mt19937_64 gen(20);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Vec2 v(n(gen), n(gen));
    const auto a = four_axis_angles(v);
    for (int q = 0; q < 4; ++q) {
      const double phi = q * std::numbers::pi / 2.0;
      const double rx = std::cos(-phi) * v.x() - std::sin(-phi) * v.y();
      const double ry = std::sin(-phi) * v.x() + std::cos(-phi) * v.y();
      double diff = std::abs(a[q] - std::atan2(ry, rx));
      diff = std::min(diff, 2.0 * std::numbers::pi - diff);
      EXPECT_LT(diff, 1e-12);
    }
  }
  const auto unit = four_axis_angles({1.0, 0.0});
  EXPECT_EQ(unit[0], 0.0);
  EXPECT_NEAR(unit[1], -std::numbers::pi / 2.0, 1e-15);
  EXPECT_NEAR(std::abs(unit[2]), std::numbers::pi, 1e-15);
  EXPECT_NEAR(unit[3], std::numbers::pi / 2.0, 1e-15);
}

TEST(SurfaceFeatureSummary, IsInvariantUnderJointRotation) {
  const Sample s = testing_support::oracle_sample(0.1, 0.03, 0.0, 4e6);
  const SurfaceTrace tr = extract_surface(s.mesh);
  const Vec2 v(1.0, 0.0);
  const Eigen::VectorXd base = surface_feature_summary(s.mesh, tr, v);
  const double th = 0.2;
  Eigen::Matrix2d R;
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  TriMesh rot = s.mesh;
  for (auto& p : rot.nodes) p = R * p;
  const Eigen::VectorXd turned = surface_feature_summary(rot, tr, R * v);
  EXPECT_NEAR((turned - base).norm(), 0.0, 1e-12);
}
