#include "mmgp/features.hpp"

#include "mmgp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mmgp {

void FeatureConfig::validate() const {
  if (!(bl_thickness > 0.0 && bl_thickness <= 1.0)) throw Error(Errc::InvalidArgument, "bl_thickness must lie in (0, 1]");
  for (double s : fourier_scales)
    if (!(s > 0.0)) throw Error(Errc::InvalidArgument, "Fourier scales must be positive");
  if (fourier_count < 1) throw Error(Errc::InvalidArgument, "fourier_count must be at least 1");
  if (n_basis < 1) throw Error(Errc::InvalidArgument, "n_basis must be at least 1");
  if (!(grid_spacing > 0.0) || !(domain_size > 0.0))
    throw Error(Errc::InvalidArgument, "grid spacing and domain size must be positive");
}

SurfaceDistance surface_distance(const TriMesh& mesh, const SurfaceTrace& surface) {
  const Points loop = surface.loop_points();
  if (loop.empty()) throw Error(Errc::InvalidArgument, "empty surface");
  SurfaceDistance out;
  out.distance.resize(mesh.nodes.size());
  out.closest.resize(mesh.nodes.size());
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const Vec2& p = mesh.nodes[i];
    double best = std::numeric_limits<double>::infinity();
    Vec2 arg = loop[0];
    for (std::size_t e = 0; e < n; ++e) {
      const Vec2 c = closest_point_on_segment(loop[e], loop[(e + 1) % n], p);
      const double d = (c - p).squaredNorm();
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    out.distance[i] = std::sqrt(best);
    out.closest[i] = arg;
  }
  return out;
}

Points volumetric_normals(const TriMesh& mesh, const SurfaceTrace& surface) {
  const SurfaceDistance sd = surface_distance(mesh, surface);
  const auto [lo, hi] = std::minmax_element(sd.distance.begin(), sd.distance.end());
  const double dmin = *lo, span = *hi - *lo;

  // Wall normals out of the fluid, i.e. into the body, for a counter-clockwise loop.
  std::vector<Vec2> wall(mesh.nodes.size(), Vec2::Zero());
  const auto& loop = surface.loop;
  const std::size_t n = loop.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 x = mesh.nodes[loop[k]];
    const Vec2 next = mesh.nodes[loop[(k + 1) % n]], prev = mesh.nodes[loop[(k + n - 1) % n]];
    const Vec2 chord = Vec2(-(next - prev).y(), (next - prev).x()).normalized();
    // Edge bisector, which stays inside sharp wedges such as a cusped trailing edge.
    Vec2 bis = (next - x).normalized() + (prev - x).normalized();
    if (bis.norm() < 1e-12) bis = chord;
    else if (bis.dot(chord) < 0.0) bis = -bis;
    wall[loop[k]] = bis.normalized();
  }

  Points out(mesh.nodes.size(), Vec2::Zero());
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const double fade = span > 0.0 ? 1.0 - (sd.distance[i] - dmin) / span : 1.0;
    const Vec2 v = sd.closest[i] - mesh.nodes[i];
    Vec2 dir;
    if (sd.distance[i] > 0.0) dir = v / v.norm();
    else if (wall[i].squaredNorm() > 0.0) dir = wall[i];
    else dir = Vec2::Zero();
    out[i] = dir * fade;
  }
  return out;
}

std::vector<double> boundary_layer_mask(std::span<const double> distances, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(Errc::InvalidArgument, "tau must lie in (0, 1]");
  double dmax = 0.0;
  for (double d : distances) dmax = std::max(dmax, d);
  std::vector<double> out(distances.size(), 1.0);
  if (!(dmax > 0.0)) return out;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    // (dhat - (1 - tau)) / tau with dhat = 1 - d / dmax, written to be exactly 1 on the wall.
    const double theta = std::max(1.0 - distances[i] / (tau * dmax), 0.0);
    out[i] = theta * theta;
  }
  return out;
}

Eigen::MatrixXd random_fourier_features(std::span<const Vec2> points, std::span<const double> scales, int count,
                                        std::uint64_t seed) {
  if (count < 1) throw Error(Errc::InvalidArgument, "count must be at least 1");
  SplitMix64 rng(seed);
  std::vector<Eigen::MatrixX2d> B;
  for (double s : scales) {
    Eigen::MatrixX2d b(count, 2);
    for (int r = 0; r < count; ++r)
      for (int c = 0; c < 2; ++c) b(r, c) = s * rng.normal();
    B.push_back(b);
  }
  const auto width = static_cast<Eigen::Index>(2 * count * scales.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), width);
  for (std::size_t i = 0; i < points.size(); ++i) {
    Eigen::Index col = 0;
    for (const auto& b : B) {
      const Eigen::VectorXd arg = 2.0 * std::numbers::pi * (b * points[i]);
      for (int r = 0; r < count; ++r) out(static_cast<Eigen::Index>(i), col + r) = std::sin(arg[r]);
      for (int r = 0; r < count; ++r) out(static_cast<Eigen::Index>(i), col + count + r) = std::cos(arg[r]);
      col += 2 * count;
    }
  }
  return out;
}

Eigen::VectorXd sinusoidal_embedding(double x, double s, double L, int n_basis) {
  if (!(s > 0.0) || !(L > 0.0)) throw Error(Errc::InvalidArgument, "spacing and domain size must be positive");
  const double d = 4.0 * L / (s * std::numbers::pi);
  Eigen::VectorXd out(2 * n_basis);
  for (int i = 0; i < n_basis; ++i) {
    const double arg = (x / s) / std::pow(d, static_cast<double>(i) / n_basis);
    out[2 * i] = std::sin(arg);
    out[2 * i + 1] = std::cos(arg);
  }
  return out;
}

double legendre(int l, double x) {
  if (l == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= l; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

Eigen::VectorXd spherical_embedding(double theta, int n_basis, bool factorial) {
  Eigen::VectorXd out(2 * n_basis);
  for (int l = 1; l <= n_basis; ++l) {
    double num = 1.0;
    if (factorial)
      for (int k = 2; k <= 2 * l + 1; ++k) num *= k;
    else
      num = 2.0 * l + 1.0;
    const double norm = std::sqrt(num / (4.0 * std::numbers::pi));
    out[2 * (l - 1)] = norm * legendre(l, std::cos(theta));
    out[2 * (l - 1) + 1] = norm * legendre(l, std::sin(theta));
  }
  return out;
}

std::array<double, 4> four_axis_angles(const Vec2& v) {
  // Rotating by minus the axis angle in exact quarter turns; +0.0 folds -0 into +0.
  const double x = v.x(), y = v.y();
  return {std::atan2(y + 0.0, x), std::atan2(-x + 0.0, y), std::atan2(-y + 0.0, -x), std::atan2(x + 0.0, -y)};
}

std::vector<CoordFeatures> trailing_coords_and_angles(const TriMesh& mesh, const SurfaceTrace& surface) {
  const Vec2 le = mesh.nodes[surface.leading_edge];
  const Vec2 te = mesh.nodes[surface.trailing_edge];
  std::vector<CoordFeatures> out(mesh.nodes.size());
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    auto& f = out[i];
    f.leading = mesh.nodes[i] - le;
    f.trailing = mesh.nodes[i] - te;
    f.leading_distance = f.leading.norm();
    f.trailing_distance = f.trailing.norm();
    const auto a = four_axis_angles(f.leading);
    const auto b = four_axis_angles(f.trailing);
    std::copy(a.begin(), a.end(), f.angles.begin());
    std::copy(b.begin(), b.end(), f.angles.begin() + 4);
  }
  return out;
}

Eigen::Matrix2d canonical_rotation(const Vec2& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw Error(Errc::ZeroVelocity, "inlet velocity has zero norm");
  Eigen::Matrix2d R;
  R << v.x() / n, v.y() / n, -v.y() / n, v.x() / n;
  return R;
}

Vec2 canonicalize(const Vec2& v, const Vec2& x) {
  const double n = v.norm();
  if (!(n > 0.0)) throw Error(Errc::ZeroVelocity, "inlet velocity has zero norm");
  return {(v.x() * x.x() + v.y() * x.y()) / n, (-v.y() * x.x() + v.x() * x.y()) / n};
}

Points canonicalize(const Vec2& v, std::span<const Vec2> xs) {
  Points out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(canonicalize(v, x));
  return out;
}

double log_pressure(double p) { return std::copysign(std::log1p(std::abs(p)), p); }

double inv_log_pressure(double q) { return std::copysign(std::expm1(std::abs(q)), q); }

Eigen::VectorXd surface_feature_summary(const TriMesh& mesh, const SurfaceTrace& surface, const Vec2& v_inf) {
  const Vec2 le = mesh.nodes[surface.leading_edge];
  const Vec2 te = mesh.nodes[surface.trailing_edge];
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(4);
  for (int v : surface.loop) {
    acc.head<2>() += canonicalize(v_inf, mesh.nodes[v] - le);
    acc.tail<2>() += canonicalize(v_inf, mesh.nodes[v] - te);
  }
  return acc / static_cast<double>(surface.loop.size());
}

}  // namespace mmgp
