#include "mmgp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace mmgp {

namespace {

double min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  auto ang = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const Vec2 u = q - p, v = r - p;
    return std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
  };
  return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

bool in_closed_triangle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  return orient2d(a, b, p) >= 0.0 && orient2d(b, c, p) >= 0.0 && orient2d(c, a, p) >= 0.0;
}

bool in_open_triangle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  return orient2d(a, b, p) > 0.0 && orient2d(b, c, p) > 0.0 && orient2d(c, a, p) > 0.0;
}

double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
         (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
}

std::uint64_t key(int a, int b) {
  const auto lo = static_cast<std::uint32_t>(std::min(a, b));
  const auto hi = static_cast<std::uint32_t>(std::max(a, b));
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

// Ear clipping of a counter-clockwise simple polygon given by indices into P.
std::vector<Tri> clip_ears(const Points& P, std::vector<int> V, double area_eps) {
  std::vector<Tri> tris;
  const auto ear_quality = [&](std::size_t i, bool closed) -> double {
    const std::size_t m = V.size();
    const int a = V[(i + m - 1) % m], b = V[i], c = V[(i + 1) % m];
    if (orient2d(P[a], P[b], P[c]) <= area_eps) return -1.0;
    for (std::size_t j = 0; j < m; ++j) {
      const int v = V[j];
      if (v == a || v == b || v == c) continue;
      const bool hit = closed ? in_closed_triangle(P[a], P[b], P[c], P[v])
                              : in_open_triangle(P[a], P[b], P[c], P[v]);
      if (hit) return -1.0;
    }
    return min_angle(P[a], P[b], P[c]);
  };
  std::vector<double> q(V.size());
  for (std::size_t i = 0; i < V.size(); ++i) q[i] = ear_quality(i, true);
  while (V.size() > 3) {
    auto best = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
    if (q[best] < 0.0) {
      // Only blocked by vertices lying on a diagonal; accept the best open ear.
      for (std::size_t i = 0; i < V.size(); ++i) q[i] = ear_quality(i, false);
      best = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
      if (q[best] < 0.0) throw Error(Errc::SelfIntersection, "polygon has no ear");
    }
    const std::size_t m = V.size();
    tris.push_back({V[(best + m - 1) % m], V[best], V[(best + 1) % m]});
    V.erase(V.begin() + static_cast<std::ptrdiff_t>(best));
    q.erase(q.begin() + static_cast<std::ptrdiff_t>(best));
    const std::size_t mm = V.size();
    const std::size_t prev = (best + mm - 1) % mm;
    const std::size_t next = best % mm;
    q[prev] = ear_quality(prev, true);
    q[next] = ear_quality(next, true);
  }
  if (orient2d(P[V[0]], P[V[1]], P[V[2]]) <= area_eps)
    throw Error(Errc::SelfIntersection, "degenerate final ear");
  tris.push_back({V[0], V[1], V[2]});
  return tris;
}

class EdgeTable {
 public:
  void add(const std::vector<Tri>& tris, int t) {
    for (int k = 0; k < 3; ++k) {
      auto& slot = map_.try_emplace(key(tris[t][k], tris[t][(k + 1) % 3]), std::array<int, 2>{-1, -1}).first->second;
      (slot[0] < 0 ? slot[0] : slot[1]) = t;
    }
  }
  void remove(const std::vector<Tri>& tris, int t) {
    for (int k = 0; k < 3; ++k) {
      auto& slot = map_.at(key(tris[t][k], tris[t][(k + 1) % 3]));
      if (slot[0] == t) slot[0] = slot[1];
      slot[1] = -1;
    }
  }
  int other(int a, int b, int t) const {
    auto it = map_.find(key(a, b));
    if (it == map_.end()) return -1;
    return it->second[0] == t ? it->second[1] : it->second[0];
  }

 private:
  std::unordered_map<std::uint64_t, std::array<int, 2>> map_;
};

int opposite(const Tri& t, int a, int b) {
  for (int v : t)
    if (v != a && v != b) return v;
  return -1;
}

}  // namespace

std::vector<Tri> constrained_triangulate(std::span<const Vec2> loop, std::span<const Vec2> interior) {
  const std::size_t n = loop.size();
  if (n < 3) throw Error(Errc::EmptyRegion, "boundary loop has fewer than three vertices");
  const double area = polygon_signed_area(loop);
  const BBox box = BBox::of(loop);
  const double area_eps = 1e-14 * std::max(box.area(), std::numeric_limits<double>::min());
  if (!is_simple_polygon(loop)) throw Error(Errc::SelfIntersection, "boundary loop self-intersects");
  if (std::abs(area) <= area_eps) throw Error(Errc::EmptyRegion, "boundary loop encloses no area");

  Points P(loop.begin(), loop.end());
  P.insert(P.end(), interior.begin(), interior.end());
  std::vector<int> V(n);
  for (std::size_t i = 0; i < n; ++i) V[i] = static_cast<int>(i);
  if (area < 0.0) std::reverse(V.begin(), V.end());
  std::vector<Tri> tris = clip_ears(P, V, area_eps);

  auto constrained = [&](int a, int b) {
    if (a >= static_cast<int>(n) || b >= static_cast<int>(n)) return false;
    const int d = std::abs(a - b);
    return d == 1 || d == static_cast<int>(n) - 1;
  };

  EdgeTable edges;
  for (std::size_t t = 0; t < tris.size(); ++t) edges.add(tris, static_cast<int>(t));

  const double eps_bary = 1e-12;
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const int p = static_cast<int>(n + i);
    int best = -1;
    Eigen::Vector3d bc_best = Eigen::Vector3d::Zero();
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const Tri& tr = tris[t];
      const auto bc = barycentric(P[tr[0]], P[tr[1]], P[tr[2]], P[p]);
      if (best < 0 || bc.minCoeff() > bc_best.minCoeff()) {
        best = static_cast<int>(t);
        bc_best = bc;
      }
    }
    if (bc_best.minCoeff() < -eps_bary)
      throw Error(Errc::InvalidArgument, "interior point " + std::to_string(i) + " lies outside the loop");
    const Tri tr = tris[best];
    int zero = -1;
    for (int k = 0; k < 3; ++k)
      if (bc_best[k] <= eps_bary) zero = k;
    if (zero < 0) {
      edges.remove(tris, best);
      tris[best] = {tr[0], tr[1], p};
      tris.push_back({tr[1], tr[2], p});
      tris.push_back({tr[2], tr[0], p});
      edges.add(tris, best);
      edges.add(tris, static_cast<int>(tris.size()) - 2);
      edges.add(tris, static_cast<int>(tris.size()) - 1);
      continue;
    }
    // On the edge opposite vertex `zero`.
    const int a = tr[(zero + 1) % 3], b = tr[(zero + 2) % 3], c = tr[zero];
    if (constrained(a, b))
      throw Error(Errc::InvalidArgument, "interior point " + std::to_string(i) + " lies on the boundary");
    const int nb = edges.other(a, b, best);
    if (nb < 0) throw Error(Errc::InvalidArgument, "interior point on an open edge");
    const int d = opposite(tris[nb], a, b);
    edges.remove(tris, best);
    edges.remove(tris, nb);
    tris[best] = {c, a, p};
    tris[nb] = {a, d, p};
    tris.push_back({d, b, p});
    tris.push_back({b, c, p});
    for (int t : {best, nb, static_cast<int>(tris.size()) - 2, static_cast<int>(tris.size()) - 1}) edges.add(tris, t);
  }

  // Lawson flips on unconstrained edges.
  const double len = std::max(box.width(), box.height());
  const double circ_eps = 1e-12 * len * len * len * len;
  std::vector<std::array<int, 2>> work;
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) work.push_back({t[k], t[(k + 1) % 3]});
  std::size_t budget = 200 * tris.size() + 1000;
  while (!work.empty() && budget > 0) {
    const auto [a0, b0] = work.back();
    work.pop_back();
    if (constrained(a0, b0)) continue;
    // Find the triangle holding a0 -> b0 in counter-clockwise order.
    int t1 = edges.other(a0, b0, -2);
    if (t1 < 0) continue;
    int t2 = edges.other(a0, b0, t1);
    if (t2 < 0) continue;
    auto has_directed = [&](int t, int a, int b) {
      for (int k = 0; k < 3; ++k)
        if (tris[t][k] == a && tris[t][(k + 1) % 3] == b) return true;
      return false;
    };
    if (!has_directed(t1, a0, b0)) std::swap(t1, t2);
    if (!has_directed(t1, a0, b0)) continue;
    const int a = a0, b = b0;
    const int c = opposite(tris[t1], a, b);
    const int d = opposite(tris[t2], a, b);
    if (incircle(P[a], P[b], P[c], P[d]) <= circ_eps) continue;
    if (orient2d(P[a], P[d], P[c]) <= area_eps || orient2d(P[d], P[b], P[c]) <= area_eps) continue;
    edges.remove(tris, t1);
    edges.remove(tris, t2);
    tris[t1] = {a, d, c};
    tris[t2] = {d, b, c};
    edges.add(tris, t1);
    edges.add(tris, t2);
    work.push_back({a, d});
    work.push_back({d, b});
    work.push_back({b, c});
    work.push_back({c, a});
    --budget;
  }
  return tris;
}

}  // namespace mmgp
