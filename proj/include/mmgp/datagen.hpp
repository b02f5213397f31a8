#pragma once

#include "mmgp/io.hpp"
#include "mmgp/mesh.hpp"

#include <complex>
#include <cstdint>
#include <string>

namespace mmgp {

/// Joukowski airfoil in a uniform stream. The circle |zeta - mu| = a passes
/// through zeta = c and is mapped by z = zeta + c^2 / zeta; world = z + offset.
struct AirfoilCase {
  std::complex<double> mu{0.0, 0.0};
  double a = 0.25;
  double c = 0.25;
  double alpha = 0.0;  // radians
  double speed = 1.0;
  double reynolds = 1e6;
  double chord = 1.0;
  Vec2 offset = Vec2::Zero();

  /// Thickness and camber parameters: mu = c (-eps + i eta).
  static AirfoilCase joukowski(double eps, double eta, double alpha, double reynolds, double nu, double c = 0.25,
                               bool centre_offset = true);
  double beta() const { return -std::arg(c - mu); }
  double circulation() const;  // Kutta condition
  /// Throws SelfIntersection when the map folds the circle.
  void validate() const;
};

/// Closed counter-clockwise polyline starting at the trailing edge.
Points joukowski_surface(const AirfoilCase& cs, int n_points);

struct FlowState {
  double ux = 0.0;
  double uy = 0.0;
  double p = 0.0;  // p / rho relative to the free stream
};

/// Potential flow; throws InsideBody for points strictly inside the airfoil.
std::vector<FlowState> solve_potential_flow(const AirfoilCase& cs, std::span<const Vec2> points);
FlowState solve_potential_flow(const AirfoilCase& cs, const Vec2& point);

/// Front stagnation point in world coordinates.
Vec2 stagnation_point(const AirfoilCase& cs);

struct Forces {
  double cl = 0.0;
  double cd = 0.0;
};
double geometric_chord(const AirfoilCase& cs, int n_dense = 4096);
double thickness_ratio(const AirfoilCase& cs, int n_dense = 4096);
/// Kutta-Joukowski lift and the skin-friction drag proxy.
Forces forces(const AirfoilCase& cs);

struct NuTConfig {
  double nu = 1.56e-5;
  double kappa = 50.0;
  double tau = 0.1;
  double wake_amplitude = 2.0;
  double wake_width = 0.03;
  double wake_spread = 0.1;
};
std::vector<double> synthetic_nu_t(const TriMesh& mesh, const AirfoilCase& cs, const NuTConfig& cfg = {});

struct MeshConfig {
  int n_surface = 128;
  int rings = 20;
  double first_height = 0.003;
  double growth = 1.25;
  BBox bbox{-2.0, 4.0, -1.5, 1.5};
};

/// Offset rings around a counter-clockwise surface polyline, extended to the
/// box. Surface nodes come first, in polyline order.
TriMesh generate_mesh(std::span<const Vec2> surface, const BBox& bbox, int ring_count, double growth,
                      double first_height, const Vec2& wake_direction);

struct VelocityDamping {
  double delta0 = 0.02;
};
double boundary_layer_thickness(double reynolds, const VelocityDamping& d = {});

struct DatasetConfig {
  int n_train = 60;
  int n_test = 20;
  int n_ood = 20;
  std::uint64_t seed = 7;
  double nu = 1.56e-5;
  double eps_min = 0.06, eps_max = 0.14;
  double eta_min = 0.0, eta_max = 0.06;
  double alpha_min_deg = -5.0, alpha_max_deg = 10.0;
  double re_min = 3e6, re_max = 5e6;          // train and test
  double ood_low_min = 2e6, ood_high_max = 6e6;  // OOD: [low_min, re_min) and (re_max, high_max]
  double reference_time_s = 1500.0;
  MeshConfig mesh;
  NuTConfig nut;
  VelocityDamping damping;

  static DatasetConfig from_config(const KeyValueConfig& kv);
  nlohmann::json to_json() const;
};

struct CaseDraw {
  double eps = 0.0;
  double eta = 0.0;
  double alpha = 0.0;  // radians
  double reynolds = 0.0;
};

/// Per-sample seed from the global seed, the split and the sample index.
std::uint64_t sample_seed(std::uint64_t seed, const std::string& split, int index);
CaseDraw draw_case(std::uint64_t seed, bool ood, const DatasetConfig& cfg);

/// Mesh and fields for one case. Velocity is the potential solution damped by
/// tanh(d / delta) near the wall; pressure is the undamped Bernoulli value.
Sample make_oracle_sample(const CaseDraw& draw, const DatasetConfig& cfg);

struct DatasetReport {
  int samples = 0;
  std::map<std::string, double> oracle_seconds;  // per sample id, split-qualified
};

/// Writes out/{train,test,ood}/sample_XXXX plus out/dataset.json.
DatasetReport generate_dataset(const DatasetConfig& cfg, const fs::path& out);

}  // namespace mmgp
