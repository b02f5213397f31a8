#pragma once

#include "mmgp/gp.hpp"
#include "mmgp/mesh.hpp"

namespace mmgp {

enum class ControlLabel { Intrado, Extrado, Wake, BBoxRight, BBoxFixed };

struct ControlPointSet {
  Points source;
  Points target;
  std::vector<ControlLabel> labels;

  std::size_t size() const { return source.size(); }
  void add(const Vec2& s, const Vec2& t, ControlLabel l) {
    source.push_back(s);
    target.push_back(t);
    labels.push_back(l);
  }
};

struct MorphOptions {
  int stations_per_side = 64;
  int wake_points = 10;
  double wake_start = 0.1;
  double wake_reach = 0.8;  // fraction of the distance to the bbox covered by wake points
  double cone_deg = 10.0;
  // Airfoil stations closer than this to an accepted control are skipped; the
  // cusp makes intrado and extrado stations nearly coincide at the trailing edge.
  double min_separation = 2e-3;
};

/// Cosine-spaced normalized abscissa stations on [0, 1].
std::vector<double> cosine_stations(int count);

/// Control points taking `trace` (on `pretreated`) to `common`, with the wake of
/// angle `wake_angle` rotated onto the horizontal.
ControlPointSet build_control_points(const TriMesh& pretreated, const SurfaceTrace& trace,
                                     const SurfaceTrace& common, double wake_angle, const BBox& bbox,
                                     const MorphOptions& opts = {});

/// Thin-plate spline with affine term, fitted in normalized coordinates.
struct RbfMorph {
  Points sources;
  Eigen::MatrixX2d weights;  // one row per source
  Eigen::Matrix<double, 3, 2> affine;  // rows: constant, x, y
  Vec2 centre = Vec2::Zero();
  double scale = 1.0;

  Vec2 apply(const Vec2& p) const;
};

/// With `fast` set, the duplicate and collinearity checks are skipped.
RbfMorph rbf_fit(const ControlPointSet& controls, bool fast = false);
Points rbf_apply(const RbfMorph& morph, std::span<const Vec2> nodes);

double tps_kernel(double r);

/// Wake-angle regressor inputs: angle of attack, inlet speed, and the y
/// coordinate of intrado and extrado at fixed normalized abscissa stations.
Eigen::VectorXd wake_angle_inputs(const SurfaceTrace& trace, double angle_of_attack, double inlet_speed,
                                  int stations = 16);
GpModel fit_wake_angle_model(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& angles,
                             const GpTrainConfig& cfg = {});
double predict_wake_angle(const GpModel& model, const Eigen::VectorXd& inputs);

}  // namespace mmgp
