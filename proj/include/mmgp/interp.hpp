#pragma once

#include "mmgp/mesh.hpp"

namespace mmgp {

struct Location {
  int triangle = -1;
  Eigen::Vector3d bary = Eigen::Vector3d::Zero();
};

/// Exact point location; throws NotFound outside the mesh.
Location locate_exact(const TriMesh& mesh, const Vec2& point);
Location locate_exact(const TriangleLocator& locator, const Vec2& point);

struct FastLocateOptions {
  int neighbours = 100;
  double radius = 0.3;
};

/// Nearest-barycentre point location with a maximin fallback near the boundary.
class FastLocator {
 public:
  explicit FastLocator(const TriMesh& mesh, FastLocateOptions opts = {});
  /// Throws NoCandidate when no barycentre lies within the fallback radius.
  Location locate(const Vec2& p) const;
  std::vector<Location> locate(std::span<const Vec2> queries) const;
  const Points& centres() const { return centres_; }

 private:
  const TriMesh* mesh_;
  FastLocateOptions opts_;
  Points centres_;
  BucketGrid grid_;
};

std::vector<Location> locate_fast(const TriMesh& src, std::span<const Vec2> queries,
                                  FastLocateOptions opts = {});

/// Rows of `fields` are per-node values; returns one row per location.
Eigen::MatrixXd interpolate(const TriMesh& src, std::span<const Location> locs, const Eigen::MatrixXd& fields);

Eigen::MatrixXd transfer_fields(const TriMesh& src, const Eigen::MatrixXd& fields,
                                std::span<const Vec2> dst_points, FastLocateOptions opts = {});

/// Piecewise-linear transfer along the surface by normalized abscissa, side by side.
/// Writes the rows of `dst_fields` that belong to surface nodes of `dst`.
void transfer_surface(const SurfaceTrace& src, const Eigen::MatrixXd& src_fields, const SurfaceTrace& dst,
                      Eigen::MatrixXd& dst_fields);

}  // namespace mmgp
