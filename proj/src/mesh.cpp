#include "mmgp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace mmgp {

Vec2 TriMesh::centroid(int t) const {
  const Tri& tri = triangles[t];
  return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
}

double TriMesh::signed_area(int t) const {
  const Tri& tri = triangles[t];
  return triangle_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

std::vector<int> TriMesh::bad_triangles() const {
  std::vector<int> bad;
  const double eps = 1e-14 * std::max(bbox().area(), std::numeric_limits<double>::min());
  for (std::size_t t = 0; t < triangles.size(); ++t)
    if (signed_area(static_cast<int>(t)) <= eps) bad.push_back(static_cast<int>(t));
  return bad;
}

void TriMesh::validate() const {
  if (surface_mask.size() != nodes.size())
    throw Error(Errc::InvalidMesh, "surface mask length does not match node count");
  const int n = static_cast<int>(nodes.size());
  for (std::size_t t = 0; t < triangles.size(); ++t)
    for (int v : triangles[t])
      if (v < 0 || v >= n)
        throw Error(Errc::InvalidMesh, "triangle " + std::to_string(t) + " has invalid node index");
  const auto bad = bad_triangles();
  if (!bad.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i)
      list += (i ? "," : "") + std::to_string(bad[i]);
    throw Error(Errc::InvalidMesh, std::to_string(bad.size()) +
                                       " inverted or degenerate triangles (first: " + list + ")");
  }
}

namespace {

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint32_t>(std::min(a, b));
  const auto hi = static_cast<std::uint32_t>(std::max(a, b));
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

// Follows directed edges into closed loops; fails on branching or open chains.
std::vector<std::vector<int>> chain_loops(const std::vector<std::array<int, 2>>& edges,
                                          std::size_t n_nodes, Errc open_code) {
  std::vector<int> next(n_nodes, -1);
  std::vector<int> indeg(n_nodes, 0);
  for (const auto& e : edges) {
    if (next[e[0]] != -1) throw Error(open_code, "boundary node " + std::to_string(e[0]) + " has several outgoing edges");
    next[e[0]] = e[1];
    ++indeg[e[1]];
  }
  for (const auto& e : edges)
    if (indeg[e[0]] != 1 || next[e[1]] == -1)
      throw Error(open_code, "boundary chain through node " + std::to_string(e[0]) + " is not closed");
  std::vector<char> seen(n_nodes, 0);
  std::vector<std::vector<int>> loops;
  for (const auto& e : edges) {
    if (seen[e[0]]) continue;
    std::vector<int> loop;
    int v = e[0];
    while (!seen[v]) {
      seen[v] = 1;
      loop.push_back(v);
      v = next[v];
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

Points gather(const Points& nodes, const std::vector<int>& idx) {
  Points out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(nodes[i]);
  return out;
}

}  // namespace

std::vector<std::array<int, 2>> boundary_edges(const TriMesh& mesh) {
  std::map<std::uint64_t, int> count;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) ++count[edge_key(t[k], t[(k + 1) % 3])];
  std::vector<std::array<int, 2>> out;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k)
      if (count[edge_key(t[k], t[(k + 1) % 3])] == 1) out.push_back({t[k], t[(k + 1) % 3]});
  return out;
}

std::vector<std::vector<int>> boundary_loops(const TriMesh& mesh) {
  return chain_loops(boundary_edges(mesh), mesh.nodes.size(), Errc::InvalidMesh);
}

std::vector<int> outer_loop(const TriMesh& mesh) {
  auto loops = boundary_loops(mesh);
  if (loops.empty()) throw Error(Errc::InvalidMesh, "mesh has no boundary");
  std::size_t best = 0;
  double best_area = -1.0;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const double a = std::abs(polygon_signed_area(gather(mesh.nodes, loops[i])));
    if (a > best_area) {
      best_area = a;
      best = i;
    }
  }
  auto loop = loops[best];
  if (polygon_signed_area(gather(mesh.nodes, loop)) < 0.0) std::reverse(loop.begin(), loop.end());
  return loop;
}

Vec2 SurfaceTrace::point_at(Side s, double t) const {
  const auto& abs = abscissa(s);
  const auto& pts = points(s);
  const double target = std::clamp(t, 0.0, 1.0) * abs.back();
  auto it = std::upper_bound(abs.begin(), abs.end(), target);
  if (it == abs.end()) return pts.back();
  const auto i = static_cast<std::size_t>(it - abs.begin());
  const double s0 = abs[i - 1], s1 = abs[i];
  const double w = s1 > s0 ? (target - s0) / (s1 - s0) : 0.0;
  return (1.0 - w) * pts[i - 1] + w * pts[i];
}

Points SurfaceTrace::loop_points() const {
  Points out;
  out.insert(out.end(), intrado_points.begin(), intrado_points.end());
  for (auto i = static_cast<int>(extrado_points.size()) - 2; i >= 1; --i) out.push_back(extrado_points[i]);
  return out;
}

SurfaceTrace extract_surface(const TriMesh& mesh) {
  if (mesh.surface_mask.size() != mesh.nodes.size())
    throw Error(Errc::InvalidMesh, "surface mask length does not match node count");
  std::vector<std::array<int, 2>> edges;
  for (const auto& e : boundary_edges(mesh))
    if (mesh.surface_mask[e[0]] && mesh.surface_mask[e[1]]) edges.push_back(e);
  std::vector<int> degree(mesh.nodes.size(), 0);
  for (const auto& e : edges) {
    ++degree[e[0]];
    ++degree[e[1]];
  }
  int marked = 0;
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    if (!mesh.surface_mask[i]) continue;
    ++marked;
    if (degree[i] != 2) throw Error(Errc::OpenLoop, "surface node " + std::to_string(i) + " does not close a loop");
  }
  if (marked < 3) throw Error(Errc::OpenLoop, "fewer than three surface nodes");
  auto loops = chain_loops(edges, mesh.nodes.size(), Errc::OpenLoop);
  if (loops.size() > 1) throw Error(Errc::MultipleLoops, std::to_string(loops.size()) + " surface loops");

  std::vector<int> loop = loops.front();
  if (polygon_signed_area(gather(mesh.nodes, loop)) < 0.0) std::reverse(loop.begin(), loop.end());

  auto better = [&](int a, int b, bool want_min) {
    const double xa = mesh.nodes[a].x(), xb = mesh.nodes[b].x();
    if (xa != xb) return want_min ? xa < xb : xa > xb;
    return a < b;
  };
  int le = loop.front(), te = loop.front();
  for (int v : loop) {
    if (better(v, le, true)) le = v;
    if (better(v, te, false)) te = v;
  }
  std::rotate(loop.begin(), std::find(loop.begin(), loop.end(), le), loop.end());

  SurfaceTrace tr;
  tr.loop = loop;
  tr.leading_edge = le;
  tr.trailing_edge = te;
  tr.loop_abscissa.assign(loop.size(), 0.0);
  for (std::size_t i = 1; i < loop.size(); ++i)
    tr.loop_abscissa[i] = tr.loop_abscissa[i - 1] + (mesh.nodes[loop[i]] - mesh.nodes[loop[i - 1]]).norm();

  const auto te_pos = static_cast<std::size_t>(std::find(loop.begin(), loop.end(), te) - loop.begin());
  std::vector<int> a(loop.begin(), loop.begin() + te_pos + 1);
  std::vector<int> b{le};
  for (std::size_t i = loop.size() - 1; i >= te_pos && i > 0; --i) b.push_back(loop[i]);

  auto mean_y = [&](const std::vector<int>& s) {
    double acc = 0.0;
    for (int v : s) acc += mesh.nodes[v].y();
    return acc / static_cast<double>(s.size());
  };
  if (mean_y(a) > mean_y(b)) std::swap(a, b);

  auto cumulative = [&](const std::vector<int>& s) {
    std::vector<double> out(s.size(), 0.0);
    for (std::size_t i = 1; i < s.size(); ++i) {
      out[i] = out[i - 1] + (mesh.nodes[s[i]] - mesh.nodes[s[i - 1]]).norm();
      if (!(out[i] > out[i - 1])) throw Error(Errc::InvalidMesh, "repeated surface node position");
    }
    return out;
  };
  tr.intrado = a;
  tr.extrado = b;
  tr.intrado_abscissa = cumulative(a);
  tr.extrado_abscissa = cumulative(b);
  tr.intrado_points = gather(mesh.nodes, a);
  tr.extrado_points = gather(mesh.nodes, b);
  return tr;
}

namespace {

// Perimeter coordinate on a rectangle, counter-clockwise from (xmin, ymin).
struct RectPath {
  BBox b;
  double per() const { return b.perimeter(); }
  double coord(const Vec2& p) const {
    const double w = b.width(), h = b.height();
    const double tol = 1e-12 * std::max(w, h);
    if (std::abs(p.y() - b.ymin) <= tol && p.x() < b.xmax - tol) return p.x() - b.xmin;
    if (std::abs(p.x() - b.xmax) <= tol && p.y() < b.ymax - tol) return w + (p.y() - b.ymin);
    if (std::abs(p.y() - b.ymax) <= tol && p.x() > b.xmin + tol) return w + h + (b.xmax - p.x());
    return 2.0 * w + h + (b.ymax - p.y());
  }
  Vec2 point(double u) const {
    const double w = b.width(), h = b.height();
    u = std::fmod(u, per());
    if (u < 0.0) u += per();
    if (u <= w) return {b.xmin + u, b.ymin};
    if (u <= w + h) return {b.xmax, b.ymin + (u - w)};
    if (u <= 2.0 * w + h) return {b.xmax - (u - w - h), b.ymax};
    return {b.xmin, b.ymax - (u - 2.0 * w - h)};
  }
  std::array<double, 4> corner_coords() const {
    const double w = b.width(), h = b.height();
    return {0.0, w, w + h, 2.0 * w + h};
  }
};

bool on_bbox_boundary(const BBox& b, const Vec2& p, double tol) {
  return b.contains(p, tol) && (std::abs(p.x() - b.xmin) <= tol || std::abs(p.x() - b.xmax) <= tol ||
                                std::abs(p.y() - b.ymin) <= tol || std::abs(p.y() - b.ymax) <= tol);
}

double angle_between(const Vec2& v, const Vec2& w) {
  if (v.squaredNorm() == 0.0) return 0.0;
  return std::abs(std::atan2(v.x() * w.y() - v.y() * w.x(), v.dot(w)));
}

// Exit of the ray p + t w from the rectangle: (t, edge id 0..3 = bottom, right, top, left).
std::pair<double, int> ray_exit(const BBox& b, const Vec2& p, const Vec2& w) {
  double best = std::numeric_limits<double>::infinity();
  int edge = -1;
  auto consider = [&](double t, int e) {
    if (t > 0.0 && t < best) {
      best = t;
      edge = e;
    }
  };
  if (w.y() < 0.0) consider((b.ymin - p.y()) / w.y(), 0);
  if (w.x() > 0.0) consider((b.xmax - p.x()) / w.x(), 1);
  if (w.y() > 0.0) consider((b.ymax - p.y()) / w.y(), 2);
  if (w.x() < 0.0) consider((b.xmin - p.x()) / w.x(), 3);
  return {best, edge};
}

// Two counter-clockwise triangles for quad (a, b, c, d), picking the diagonal
// with the larger minimum area.
bool split_quad(const Points& P, int a, int b, int c, int d, std::vector<Tri>& out) {
  const double s1 = std::min(triangle_area(P[a], P[b], P[c]), triangle_area(P[a], P[c], P[d]));
  const double s2 = std::min(triangle_area(P[a], P[b], P[d]), triangle_area(P[b], P[c], P[d]));
  if (std::max(s1, s2) <= 0.0) return false;
  if (s1 >= s2) {
    out.push_back({a, b, c});
    out.push_back({a, c, d});
  } else {
    out.push_back({a, b, d});
    out.push_back({b, c, d});
  }
  return true;
}

}  // namespace

TriMesh extend_to_bbox(const TriMesh& mesh, const BBox& bbox, const Vec2& wake_direction,
                       const ExtendOptions& opts) {
  const double scale = std::max(bbox.width(), bbox.height());
  const double tol = 1e-12 * scale;
  for (const auto& p : mesh.nodes)
    if (!bbox.contains(p, tol)) throw Error(Errc::OutsideBBox, "mesh node outside the bounding box");
  if (mesh.surface_mask.size() != mesh.nodes.size())
    throw Error(Errc::InvalidMesh, "surface mask length does not match node count");

  const std::vector<int> outer = outer_loop(mesh);
  const Points outer_pts = gather(mesh.nodes, outer);
  const bool all_on = std::all_of(outer_pts.begin(), outer_pts.end(),
                                  [&](const Vec2& p) { return on_bbox_boundary(bbox, p, tol); });
  if (all_on && std::abs(polygon_signed_area(outer_pts) - bbox.area()) <= 1e-12 * bbox.area()) return mesh;

  if (!(wake_direction.norm() > 0.0)) throw Error(Errc::InvalidArgument, "zero wake direction");
  const Vec2 w = wake_direction.normalized();

  Vec2 origin = Vec2::Zero();
  const bool has_surface = std::any_of(mesh.surface_mask.begin(), mesh.surface_mask.end(), [](char c) { return c; });
  if (has_surface) {
    origin = mesh.nodes[extract_surface(mesh).trailing_edge];
  } else {
    for (const auto& p : mesh.nodes) origin += p;
    origin /= static_cast<double>(mesh.nodes.size());
  }

  // Contiguous outer-loop chain facing the wake. The cone width is a heuristic.
  const int n = static_cast<int>(outer.size());
  const double cone = opts.cone_deg * std::numbers::pi / 180.0;
  std::vector<double> dev(n);
  for (int i = 0; i < n; ++i) dev[i] = angle_between(outer_pts[i] - origin, w);
  const int seed = static_cast<int>(std::min_element(dev.begin(), dev.end()) - dev.begin());
  auto wrap = [n](int i) { return ((i % n) + n) % n; };
  int lo = seed, hi = seed;  // inclusive, hi may exceed n before wrapping
  while (hi - lo + 2 < n && dev[wrap(hi + 1)] <= cone) ++hi;
  while (hi - lo + 2 < n && dev[wrap(lo - 1)] <= cone) --lo;
  if (hi == lo) {
    if (dev[wrap(hi + 1)] <= dev[wrap(lo - 1)]) ++hi;
    else --lo;
  }
  std::vector<int> chain;  // positions in the outer loop
  for (int i = lo; i <= hi; ++i) chain.push_back(wrap(i));
  const int k = static_cast<int>(chain.size());

  // Project the chain onto one rectangle edge.
  Points proj(k);
  std::vector<double> reach(k);
  int edge = -1;
  for (int i = 0; i < k; ++i) {
    const Vec2& p = outer_pts[chain[i]];
    auto [t, e] = ray_exit(bbox, p, w);
    if (e < 0 || t <= 1e-9 * scale) throw Error(Errc::ProjectionFailure, "wake node cannot be projected onto the bounding box");
    if (edge >= 0 && e != edge) throw Error(Errc::ProjectionFailure, "wake projection spans several bounding-box edges");
    edge = e;
    reach[i] = t;
    proj[i] = p + t * w;
    for (int j = 0; j < n; ++j) {
      const int a = j, b = (j + 1) % n;
      if (a == chain[i] || b == chain[i]) continue;
      if (segments_intersect(p, proj[i], outer_pts[a], outer_pts[b]))
        throw Error(Errc::ProjectionFailure, "wake projection crosses the mesh");
    }
  }
  const RectPath path{bbox};
  std::vector<double> u(k);
  for (int i = 0; i < k; ++i) u[i] = path.coord(proj[i]);
  for (int i = 1; i < k; ++i)
    if (!(u[i] > u[i - 1])) throw Error(Errc::ProjectionFailure, "wake projection inverts element ordering");

  TriMesh out = mesh;
  auto add_node = [&](const Vec2& p) {
    out.nodes.push_back(p);
    out.surface_mask.push_back(0);
    return static_cast<int>(out.nodes.size()) - 1;
  };

  // Quad strip between the chain and its projection, layered geometrically.
  double h_chain = 0.0;
  for (int i = 1; i < k; ++i) h_chain += (outer_pts[chain[i]] - outer_pts[chain[i - 1]]).norm();
  h_chain /= (k - 1);
  const double cap = bbox.perimeter() / opts.perimeter_divisions;
  double mean_reach = 0.0;
  for (double t : reach) mean_reach += t;
  mean_reach /= k;
  std::vector<double> frac;
  {
    double s = 0.0, step = std::min(h_chain, cap);
    while (s + 1.5 * step < mean_reach) {
      s += step;
      frac.push_back(s / mean_reach);
      step = std::min(2.0 * step, cap);
    }
    frac.push_back(1.0);
  }
  const int layers = static_cast<int>(frac.size());
  std::vector<std::vector<int>> ray(k, std::vector<int>(layers + 1));
  for (int i = 0; i < k; ++i) {
    ray[i][0] = outer[chain[i]];
    const Vec2& p = outer_pts[chain[i]];
    for (int j = 1; j < layers; ++j) ray[i][j] = add_node(p + frac[j - 1] * reach[i] * w);
    ray[i][layers] = add_node(proj[i]);
  }
  for (int i = 0; i + 1 < k; ++i)
    for (int j = 0; j < layers; ++j)
      if (!split_quad(out.nodes, ray[i][j], ray[i][j + 1], ray[i + 1][j + 1], ray[i + 1][j], out.triangles))
        throw Error(Errc::ProjectionFailure, "wake strip element is inverted");

  // Rectangle samples from the last projected node round to the first.
  const double per = path.per();
  double span = u[0] - u[k - 1];
  span = std::fmod(span + 2.0 * per, per);
  const double ha = std::min((proj[k - 1] - proj[k - 2]).norm(), cap);
  const double hb = std::min((proj[1] - proj[0]).norm(), cap);
  struct Sample {
    double s;
    double h;
    bool corner;
  };
  std::vector<Sample> fwd, bwd;
  for (double s = 0.0, step = ha; s + step < span;) {
    s += step;
    fwd.push_back({s, step, false});
    step = std::min(2.0 * step, cap);
  }
  for (double s = span, step = hb; s - step > 0.0;) {
    s -= step;
    bwd.push_back({s, step, false});
    step = std::min(2.0 * step, cap);
  }
  std::vector<Sample> samples;
  for (const auto& f : fwd)
    if (f.s <= 0.5 * span) samples.push_back(f);
  std::vector<Sample> tail;
  for (const auto& b : bwd)
    if (b.s > 0.5 * span) tail.push_back(b);
  if (!samples.empty() && !tail.empty()) {
    const double gap = tail.back().s - samples.back().s;
    if (gap < 0.5 * std::min(samples.back().h, tail.back().h)) tail.pop_back();
  }
  samples.insert(samples.end(), tail.rbegin(), tail.rend());
  for (double c : path.corner_coords()) {
    double s = std::fmod(c - u[k - 1] + 2.0 * per, per);
    if (s <= 0.0 || s >= span) continue;
    samples.push_back({s, 0.0, true});
  }
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.s < b.s; });
  {
    std::vector<Sample> kept;
    for (const auto& smp : samples) {
      if (!smp.corner) {
        bool near = false;
        for (const auto& o : samples)
          if (o.corner && std::abs(o.s - smp.s) < 0.5 * smp.h) near = true;
        if (near) continue;
      }
      kept.push_back(smp);
    }
    samples.swap(kept);
  }

  // Region polygon: rectangle path, first wake ray inward, outer loop reversed, last ray outward.
  std::vector<int> poly_idx;
  poly_idx.push_back(ray[k - 1][layers]);
  for (const auto& smp : samples) poly_idx.push_back(add_node(path.point(u[k - 1] + smp.s)));
  for (int j = layers; j >= 1; --j) poly_idx.push_back(ray[0][j]);
  for (int i = chain[0];; i = wrap(i - 1)) {
    poly_idx.push_back(outer[i]);
    if (i == chain[k - 1]) break;
  }
  for (int j = 1; j < layers; ++j) poly_idx.push_back(ray[k - 1][j]);
  const Points poly = gather(out.nodes, poly_idx);
  if (!is_simple_polygon(poly)) throw Error(Errc::SelfIntersection, "extension region is not simple");

  Points fill;
  const double margin = 0.6 * cap;
  for (double y = bbox.ymin + 0.5 * cap; y < bbox.ymax; y += cap) {
    for (double x = bbox.xmin + 0.5 * cap; x < bbox.xmax; x += cap) {
      const Vec2 p(x, y);
      if (!point_in_polygon(poly, p)) continue;
      bool ok = true;
      for (std::size_t e = 0; e < poly.size() && ok; ++e)
        if ((closest_point_on_segment(poly[e], poly[(e + 1) % poly.size()], p) - p).norm() < margin) ok = false;
      if (ok) fill.push_back(p);
    }
  }
  const auto tris = constrained_triangulate(poly, fill);
  std::vector<int> map = poly_idx;
  for (const auto& p : fill) map.push_back(add_node(p));
  for (const auto& t : tris) out.triangles.push_back({map[t[0]], map[t[1]], map[t[2]]});
  return out;
}

TriangleLocator::TriangleLocator(const TriMesh& mesh) : mesh_(&mesh) {
  std::vector<BBox> boxes;
  boxes.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const std::array<Vec2, 3> v{mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]};
    boxes.push_back(BBox::of(v));
  }
  grid_ = BucketGrid(boxes, 2.0);
}

std::optional<TriangleLocator::Hit> TriangleLocator::locate(const Vec2& p, double tol) const {
  std::optional<Hit> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int t : grid_.candidates(p)) {
    const Tri& tri = mesh_->triangles[t];
    const auto bc = barycentric(mesh_->nodes[tri[0]], mesh_->nodes[tri[1]], mesh_->nodes[tri[2]], p);
    const double m = bc.minCoeff();
    if (m >= -tol && m > best_min) {
      best_min = m;
      best = Hit{t, bc};
    }
  }
  return best;
}

std::vector<double> clamped_extrapolate(const TriMesh& mesh, std::span<const double> field,
                                        std::span<const Vec2> query_points) {
  if (field.size() != mesh.nodes.size())
    throw Error(Errc::DimensionMismatch, "field length does not match node count");
  const TriangleLocator loc(mesh);
  const auto edges = boundary_edges(mesh);
  std::vector<double> out;
  out.reserve(query_points.size());
  for (const auto& q : query_points) {
    if (auto hit = loc.locate(q)) {
      const Tri& t = mesh.triangles[hit->triangle];
      const Eigen::Vector3d w = hit->bary.cwiseMax(0.0) / hit->bary.cwiseMax(0.0).sum();
      out.push_back(w[0] * field[t[0]] + w[1] * field[t[1]] + w[2] * field[t[2]]);
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (const auto& e : edges) {
      double s = 0.0;
      const Vec2 c = closest_point_on_segment(mesh.nodes[e[0]], mesh.nodes[e[1]], q, &s);
      const double d = (c - q).squaredNorm();
      if (d < best) {
        best = d;
        value = (1.0 - s) * field[e[0]] + s * field[e[1]];
      }
    }
    out.push_back(value);
  }
  return out;
}

}  // namespace mmgp
