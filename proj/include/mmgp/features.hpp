#pragma once

#include "mmgp/mesh.hpp"

#include <cstdint>

namespace mmgp {

struct FeatureConfig {
  double bl_thickness = 0.1;
  std::vector<double> fourier_scales{0.5, 1.0, 1.5};
  int fourier_count = 128;
  int n_basis = 8;
  double grid_spacing = 0.01;
  double domain_size = 6.0;
  std::uint64_t rff_seed = 0;
  bool harmonic_factorial = true;  // false uses sqrt((2l+1)/4pi)

  void validate() const;
};

/// Unsigned distance from every node to the closed surface polyline, with the
/// closest surface point.
struct SurfaceDistance {
  std::vector<double> distance;
  Points closest;
};
SurfaceDistance surface_distance(const TriMesh& mesh, const SurfaceTrace& surface);

/// Unit vectors toward the closest surface point, faded by one minus the
/// min-max normalized distance. Surface nodes take the wall normal pointing
/// out of the fluid domain.
Points volumetric_normals(const TriMesh& mesh, const SurfaceTrace& surface);

/// Squared-decay wall mask: 1 at the wall, 0 where the normalized inverted
/// distance is at most 1 - tau.
std::vector<double> boundary_layer_mask(std::span<const double> distances, double tau);

/// Multiscale random Fourier features. Per scale: count sines then count cosines.
Eigen::MatrixXd random_fourier_features(std::span<const Vec2> points, std::span<const double> scales, int count,
                                        std::uint64_t seed);

/// Interleaved (sin, cos) pairs with frequencies 1 / (s d^{i/n}), d = 4L/(s pi).
Eigen::VectorXd sinusoidal_embedding(double x, double s, double L, int n_basis);

/// Interleaved (Y_l, odd Y_l) for l = 1..n_basis.
Eigen::VectorXd spherical_embedding(double theta, int n_basis, bool factorial = true);

double legendre(int l, double x);

/// Polar angles of v with respect to the axes (1,0), (0,1), (-1,0), (0,-1).
std::array<double, 4> four_axis_angles(const Vec2& v);

struct CoordFeatures {
  Vec2 leading;
  Vec2 trailing;
  double leading_distance = 0.0;
  double trailing_distance = 0.0;
  std::array<double, 8> angles{};  // leading-edge axes, then trailing-edge axes
};
std::vector<CoordFeatures> trailing_coords_and_angles(const TriMesh& mesh, const SurfaceTrace& surface);

/// Rotation taking v_inf onto the positive x axis.
Eigen::Matrix2d canonical_rotation(const Vec2& v_inf);
Vec2 canonicalize(const Vec2& v_inf, const Vec2& x);
Points canonicalize(const Vec2& v_inf, std::span<const Vec2> xs);

double log_pressure(double p);
double inv_log_pressure(double q);

/// Fixed-length geometry summary for regression inputs: mean over surface
/// nodes of the canonicalized leading- and trailing-edge coordinates.
Eigen::VectorXd surface_feature_summary(const TriMesh& mesh, const SurfaceTrace& surface, const Vec2& v_inf);

}  // namespace mmgp
