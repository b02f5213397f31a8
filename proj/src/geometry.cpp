#include "mmgp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace mmgp {

std::array<Vec2, 4> BBox::corners() const {
  return {Vec2(xmin, ymin), Vec2(xmax, ymin), Vec2(xmax, ymax), Vec2(xmin, ymax)};
}

BBox BBox::of(std::span<const Vec2> pts) {
  BBox b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
         std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    b.xmin = std::min(b.xmin, p.x());
    b.xmax = std::max(b.xmax, p.x());
    b.ymin = std::min(b.ymin, p.y());
    b.ymax = std::max(b.ymax, p.y());
  }
  return b;
}

Eigen::Vector3d barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double det = orient2d(a, b, c);
  const double la = orient2d(p, b, c) / det;
  const double lb = orient2d(a, p, c) / det;
  return {la, lb, 1.0 - la - lb};
}

Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p, double* t) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  if (t) *t = s;
  return a + s * ab;
}

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

double rect_distance(const Vec2& p, double x0, double x1, double y0, double y1) {
  const double dx = std::max({x0 - p.x(), 0.0, p.x() - x1});
  const double dy = std::max({y0 - p.y(), 0.0, p.y() - y1});
  return std::hypot(dx, dy);
}

}  // namespace

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  // Disjoint extents cannot meet; this also guards nearly collinear pairs against rounded orientations.
  if (std::max(a.x(), b.x()) < std::min(c.x(), d.x()) || std::max(c.x(), d.x()) < std::min(a.x(), b.x()) ||
      std::max(a.y(), b.y()) < std::min(c.y(), d.y()) || std::max(c.y(), d.y()) < std::min(a.y(), b.y()))
    return false;
  const int o1 = sign(orient2d(a, b, c));
  const int o2 = sign(orient2d(a, b, d));
  const int o3 = sign(orient2d(c, d, a));
  const int o4 = sign(orient2d(c, d, b));
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

double polygon_signed_area(std::span<const Vec2> loop) {
  double acc = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = loop[i];
    const Vec2& q = loop[(i + 1) % n];
    acc += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * acc;
}

bool point_in_polygon(std::span<const Vec2> loop, const Vec2& p) {
  bool inside = false;
  const std::size_t n = loop.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double xc = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < xc) inside = !inside;
    }
  }
  return inside;
}

bool is_simple_polygon(std::span<const Vec2> loop) {
  const std::size_t n = loop.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      const Vec2& c = loop[j];
      const Vec2& d = loop[(j + 1) % n];
      if (adjacent) {
        // Adjacent edges may only share their common vertex.
        const Vec2& shared = (j == i + 1) ? b : a;
        const Vec2& far_self = (j == i + 1) ? a : b;
        const Vec2& far_other = (j == i + 1) ? d : c;
        if (sign(orient2d(far_self, shared, far_other)) == 0 &&
            (far_other - shared).dot(far_self - shared) > 0.0) {
          return false;  // folds back on itself
        }
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

BucketGrid::BucketGrid(std::span<const BBox> item_boxes, double per_cell) {
  if (item_boxes.empty()) return;
  box_ = item_boxes.front();
  for (const auto& b : item_boxes) {
    box_.xmin = std::min(box_.xmin, b.xmin);
    box_.xmax = std::max(box_.xmax, b.xmax);
    box_.ymin = std::min(box_.ymin, b.ymin);
    box_.ymax = std::max(box_.ymax, b.ymax);
  }
  const double n = static_cast<double>(item_boxes.size());
  double w = std::max(box_.width(), 1e-12);
  double h = std::max(box_.height(), 1e-12);
  const double cell = std::sqrt(w * h * std::max(per_cell, 1.0) / n);
  nx_ = std::clamp(static_cast<int>(std::ceil(w / cell)), 1, 4096);
  ny_ = std::clamp(static_cast<int>(std::ceil(h / cell)), 1, 4096);
  hx_ = w / nx_;
  hy_ = h / ny_;

  std::vector<int> counts(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
  auto for_cells = [&](const BBox& b, auto&& fn) {
    const int x0 = cell_x(b.xmin), x1 = cell_x(b.xmax);
    const int y0 = cell_y(b.ymin), y1 = cell_y(b.ymax);
    for (int iy = y0; iy <= y1; ++iy)
      for (int ix = x0; ix <= x1; ++ix) fn(iy * nx_ + ix);
  };
  for (const auto& b : item_boxes) for_cells(b, [&](int c) { ++counts[c + 1]; });
  for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
  offsets_ = counts;
  items_.resize(offsets_.back());
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < item_boxes.size(); ++i)
    for_cells(item_boxes[i], [&](int c) { items_[fill[c]++] = static_cast<int>(i); });
}

int BucketGrid::cell_x(double x) const {
  return std::clamp(static_cast<int>(std::floor((x - box_.xmin) / hx_)), 0, nx_ - 1);
}

int BucketGrid::cell_y(double y) const {
  return std::clamp(static_cast<int>(std::floor((y - box_.ymin) / hy_)), 0, ny_ - 1);
}

std::span<const int> BucketGrid::cell(int ix, int iy) const {
  const int c = iy * nx_ + ix;
  return {items_.data() + offsets_[c], static_cast<std::size_t>(offsets_[c + 1] - offsets_[c])};
}

std::span<const int> BucketGrid::candidates(const Vec2& p) const {
  if (nx_ == 0 || !box_.contains(p)) return {};
  return cell(cell_x(p.x()), cell_y(p.y()));
}

std::vector<int> BucketGrid::k_nearest(const Vec2& p, int k, std::span<const Vec2> centres) const {
  std::vector<int> out;
  if (nx_ == 0 || k <= 0) return out;
  // max-heap on (distance, index) so ties resolve by index
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry> heap;
  const int cx = cell_x(p.x());
  const int cy = cell_y(p.y());
  const int max_ring = std::max({cx, nx_ - 1 - cx, cy, ny_ - 1 - cy});
  for (int r = 0; r <= max_ring; ++r) {
    const int x0 = cx - r, x1 = cx + r, y0 = cy - r, y1 = cy + r;
    for (int iy = std::max(y0, 0); iy <= std::min(y1, ny_ - 1); ++iy) {
      for (int ix = std::max(x0, 0); ix <= std::min(x1, nx_ - 1); ++ix) {
        if (iy != y0 && iy != y1 && ix != x0 && ix != x1) continue;  // ring only
        for (int item : cell(ix, iy)) {
          const Entry e{(centres[item] - p).squaredNorm(), item};
          if (static_cast<int>(heap.size()) < k) {
            heap.push(e);
          } else if (e < heap.top()) {
            heap.pop();
            heap.push(e);
          }
        }
      }
    }
    if (static_cast<int>(heap.size()) == k) {
      // Lower bound on the distance to any cell outside the visited block.
      const double bx0 = box_.xmin + std::max(x0, 0) * hx_;
      const double bx1 = box_.xmin + (std::min(x1, nx_ - 1) + 1) * hx_;
      const double by0 = box_.ymin + std::max(y0, 0) * hy_;
      const double by1 = box_.ymin + (std::min(y1, ny_ - 1) + 1) * hy_;
      double bound = std::numeric_limits<double>::infinity();
      if (x0 > 0) bound = std::min(bound, rect_distance(p, box_.xmin, bx0, box_.ymin, box_.ymax));
      if (x1 < nx_ - 1) bound = std::min(bound, rect_distance(p, bx1, box_.xmax, box_.ymin, box_.ymax));
      if (y0 > 0) bound = std::min(bound, rect_distance(p, box_.xmin, box_.xmax, box_.ymin, by0));
      if (y1 < ny_ - 1) bound = std::min(bound, rect_distance(p, box_.xmin, box_.xmax, by1, box_.ymax));
      if (bound * bound > heap.top().first) break;
    }
  }
  out.resize(heap.size());
  for (auto i = static_cast<int>(heap.size()) - 1; i >= 0; --i) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

std::vector<int> BucketGrid::within_radius(const Vec2& p, double radius,
                                           std::span<const Vec2> centres) const {
  std::vector<std::pair<double, int>> hits;
  if (nx_ == 0) return {};
  const int x0 = cell_x(p.x() - radius), x1 = cell_x(p.x() + radius);
  const int y0 = cell_y(p.y() - radius), y1 = cell_y(p.y() + radius);
  const double r2 = radius * radius;
  for (int iy = y0; iy <= y1; ++iy)
    for (int ix = x0; ix <= x1; ++ix)
      for (int item : cell(ix, iy)) {
        const double d2 = (centres[item] - p).squaredNorm();
        if (d2 <= r2) hits.emplace_back(d2, item);
      }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  std::vector<int> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.second);
  return out;
}

}  // namespace mmgp
