#pragma once

#include "mmgp/geometry.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mmgp {

struct TriMesh {
  Points nodes;
  std::vector<Tri> triangles;
  std::vector<char> surface_mask;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  BBox bbox() const { return BBox::of(nodes); }
  Vec2 centroid(int t) const;
  double signed_area(int t) const;

  /// Throws InvalidMesh on bad indices, inverted or degenerate triangles,
  /// or a surface mask of the wrong length.
  void validate() const;
  /// Triangles whose signed area is not above the degeneracy threshold.
  std::vector<int> bad_triangles() const;
};

/// Boundary edges oriented so that the mesh interior lies on their left.
std::vector<std::array<int, 2>> boundary_edges(const TriMesh& mesh);

/// Closed boundary loops, each following the interior-on-the-left orientation.
std::vector<std::vector<int>> boundary_loops(const TriMesh& mesh);

/// Outer boundary loop (largest enclosed area), counter-clockwise.
std::vector<int> outer_loop(const TriMesh& mesh);

enum class Side { Intrado = 0, Extrado = 1 };

struct SurfaceTrace {
  std::vector<int> loop;  // counter-clockwise, starting at the leading edge
  std::vector<double> loop_abscissa;
  int leading_edge = -1;
  int trailing_edge = -1;
  std::vector<int> intrado;  // leading edge to trailing edge
  std::vector<int> extrado;  // leading edge to trailing edge
  std::vector<double> intrado_abscissa;
  std::vector<double> extrado_abscissa;
  Points intrado_points;
  Points extrado_points;

  const std::vector<int>& side(Side s) const { return s == Side::Intrado ? intrado : extrado; }
  const std::vector<double>& abscissa(Side s) const {
    return s == Side::Intrado ? intrado_abscissa : extrado_abscissa;
  }
  const Points& points(Side s) const { return s == Side::Intrado ? intrado_points : extrado_points; }
  double length(Side s) const { return abscissa(s).back(); }
  /// Point at normalized abscissa t in [0, 1] along one side.
  Vec2 point_at(Side s, double t) const;
  Vec2 leading_point() const { return intrado_points.front(); }
  Vec2 trailing_point() const { return intrado_points.back(); }
  /// Polyline of the full loop in order, closed implicitly.
  Points loop_points() const;
};

SurfaceTrace extract_surface(const TriMesh& mesh);

struct ExtendOptions {
  double cone_deg = 10.0;  // heuristic wake cone half-angle
  int perimeter_divisions = 64;
};

/// Extends a mesh so that its external boundary is the rectangle `bbox`.
TriMesh extend_to_bbox(const TriMesh& mesh, const BBox& bbox, const Vec2& wake_direction,
                       const ExtendOptions& opts = {});

/// Triangulates a simple polygon (any orientation) with extra interior
/// vertices. Indices refer to the loop followed by the interior points.
std::vector<Tri> constrained_triangulate(std::span<const Vec2> loop,
                                         std::span<const Vec2> interior = {});

/// Bucket-grid point location over the triangles of a mesh.
class TriangleLocator {
 public:
  explicit TriangleLocator(const TriMesh& mesh);
  struct Hit {
    int triangle = -1;
    Eigen::Vector3d bary = Eigen::Vector3d::Zero();
  };
  std::optional<Hit> locate(const Vec2& p, double tol = 1e-12) const;
  const TriMesh& mesh() const { return *mesh_; }

 private:
  const TriMesh* mesh_;
  BucketGrid grid_;
};

/// P1 interpolation inside the mesh, value at the nearest boundary point outside.
std::vector<double> clamped_extrapolate(const TriMesh& mesh, std::span<const double> field,
                                        std::span<const Vec2> query_points);

}  // namespace mmgp
