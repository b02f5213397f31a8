#pragma once

#include "mmgp/core.hpp"

#include <span>

namespace mmgp {

struct BBox {
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  double perimeter() const { return 2.0 * (width() + height()); }
  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= xmin - tol && p.x() <= xmax + tol && p.y() >= ymin - tol && p.y() <= ymax + tol;
  }
  /// Rectangle corners, counter-clockwise from (xmin, ymin).
  std::array<Vec2, 4> corners() const;
  static BBox of(std::span<const Vec2> pts);
};

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
inline double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

inline double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * orient2d(a, b, c);
}

/// Barycentric coordinates of p with respect to (a, b, c). Components sum to 1.
Eigen::Vector3d barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p);

/// Closest point to p on segment [a, b] and its parameter t in [0, 1].
Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p, double* t = nullptr);

/// Proper or improper intersection of closed segments [a, b] and [c, d].
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

double polygon_signed_area(std::span<const Vec2> loop);

/// Even-odd rule; points on the boundary may go either way.
bool point_in_polygon(std::span<const Vec2> loop, const Vec2& p);

/// O(n^2) check that non-adjacent edges of a closed polyline do not intersect.
bool is_simple_polygon(std::span<const Vec2> loop);

/// Uniform bucket grid over a set of 2D items given by their bounding boxes.
/// Used for point location (triangle boxes) and nearest-neighbour queries
/// (degenerate boxes at item centres).
class BucketGrid {
 public:
  BucketGrid() = default;
  /// `per_cell` sets the target mean occupancy.
  BucketGrid(std::span<const BBox> item_boxes, double per_cell);

  /// Items whose box overlaps the cell containing p.
  std::span<const int> candidates(const Vec2& p) const;

  /// k nearest item centres to p (only valid when items are points).
  std::vector<int> k_nearest(const Vec2& p, int k, std::span<const Vec2> centres) const;

  /// All item centres within `radius` of p, sorted by distance then index.
  std::vector<int> within_radius(const Vec2& p, double radius, std::span<const Vec2> centres) const;

  bool empty() const { return nx_ == 0; }

 private:
  int cell_x(double x) const;
  int cell_y(double y) const;
  std::span<const int> cell(int ix, int iy) const;

  BBox box_;
  int nx_ = 0;
  int ny_ = 0;
  double hx_ = 1.0;
  double hy_ = 1.0;
  std::vector<int> offsets_;
  std::vector<int> items_;
};

}  // namespace mmgp
