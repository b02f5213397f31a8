#include "mmgp/mesh.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

using namespace mmgp;
using testing_support::grid_mesh;

namespace {

// Square annulus: 3x3 unit cells with the middle one removed; the hole is the surface.
TriMesh square_annulus() {
  TriMesh m = grid_mesh(3, 3, {0.0, 3.0, 0.0, 3.0}, {4});
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const Vec2& p = m.nodes[i];
    m.surface_mask[i] = (p.x() >= 1.0 && p.x() <= 2.0 && p.y() >= 1.0 && p.y() <= 2.0) ? 1 : 0;
  }
  return m;
}

double total_area(const TriMesh& m) {
  double a = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) a += m.signed_area(static_cast<int>(t));
  return a;
}

// Edges used by exactly one triangle, found by counting undirected edges.
std::vector<std::array<int, 2>> naive_boundary(const TriMesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  std::vector<std::array<int, 2>> out;
  for (const auto& [e, c] : count)
    if (c == 1) out.push_back({e.first, e.second});
  return out;
}

bool on_rectangle(const BBox& b, const Vec2& p, double tol) {
  const bool in = b.contains(p, tol);
  return in && (std::abs(p.x() - b.xmin) <= tol || std::abs(p.x() - b.xmax) <= tol ||
                std::abs(p.y() - b.ymin) <= tol || std::abs(p.y() - b.ymax) <= tol);
}

}  // namespace

TEST(ExtractSurface, SquareHoleGivesUnitAbscissa) {
  const TriMesh m = square_annulus();
  m.validate();
  EXPECT_EQ(boundary_loops(m).size(), 2u);
  const SurfaceTrace tr = extract_surface(m);
  ASSERT_EQ(tr.loop.size(), 4u);
  ASSERT_EQ(tr.loop_abscissa.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(tr.loop_abscissa[i], static_cast<double>(i));
  EXPECT_GT(polygon_signed_area(tr.loop_points()), 0.0);
}

TEST(ExtractSurface, UnclosedMarksAreRejected) {
  TriMesh m = square_annulus();
  // Marking one extra outer node leaves a surface node of degree zero.
  m.surface_mask[0] = 1;
  EXPECT_THROW(
      {
        try {
          extract_surface(m);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), Errc::OpenLoop);
          throw;
        }
      },
      Error);
}

TEST(ExtractSurface, SymmetricAirfoilSidesMirror) {
  const Sample s = testing_support::oracle_sample(0.1, 0.0, 0.0, 4e6);
  const SurfaceTrace tr = extract_surface(s.mesh);
  ASSERT_EQ(tr.intrado.size(), tr.extrado.size());
  for (std::size_t i = 0; i < tr.intrado.size(); ++i) {
    EXPECT_NEAR(tr.intrado_abscissa[i], tr.extrado_abscissa[i], 1e-9);
    EXPECT_NEAR(tr.intrado_points[i].x(), tr.extrado_points[i].x(), 1e-9);
    EXPECT_NEAR(tr.intrado_points[i].y(), -tr.extrado_points[i].y(), 1e-9);
  }
}

TEST(ExtractSurface, LeadingEdgeIsMinimalX) {
  const Sample s = testing_support::oracle_sample(0.12, 0.04, 3.0, 4e6);
  const SurfaceTrace tr = extract_surface(s.mesh);
  int best = -1;
  for (std::size_t i = 0; i < s.mesh.nodes.size(); ++i)
    if (s.mesh.surface_mask[i] && (best < 0 || s.mesh.nodes[i].x() < s.mesh.nodes[best].x())) best = static_cast<int>(i);
  EXPECT_EQ(tr.leading_edge, best);
  EXPECT_EQ(tr.loop.front(), best);
  EXPECT_EQ(tr.intrado.front(), best);
  EXPECT_EQ(tr.extrado.front(), best);
  EXPECT_EQ(tr.intrado.back(), tr.trailing_edge);
  EXPECT_LT(tr.intrado_points[tr.intrado.size() / 2].y(), tr.extrado_points[tr.extrado.size() / 2].y());
}

TEST(ExtendToBBox, CoincidentMeshIsUnchanged) {
  const BBox box{0.0, 1.0, 0.0, 1.0};
  const TriMesh m = grid_mesh(4, 4, box);
  const TriMesh out = extend_to_bbox(m, box, {1.0, 0.0});
  EXPECT_EQ(out.nodes.size(), m.nodes.size());
  EXPECT_EQ(out.triangles, m.triangles);
}

TEST(ExtendToBBox, SingleTriangleFillsRectangle) {
  TriMesh m;
  m.nodes = {{0.3, 0.3}, {0.6, 0.35}, {0.45, 0.6}};
  m.triangles = {{0, 1, 2}};
  m.surface_mask.assign(3, 0);
  const BBox box{0.0, 1.0, 0.0, 1.0};
  const TriMesh out = extend_to_bbox(m, box, {1.0, 0.0});
  out.validate();
  EXPECT_NEAR(total_area(out), box.area(), 1e-12);
  for (const auto& e : naive_boundary(out)) {
    EXPECT_TRUE(on_rectangle(box, out.nodes[e[0]], 1e-12));
    EXPECT_TRUE(on_rectangle(box, out.nodes[e[1]], 1e-12));
  }
  EXPECT_THROW(extend_to_bbox(m, {0.0, 0.5, 0.0, 0.5}, {1.0, 0.0}), Error);
}

TEST(ExtendToBBox, WakeNodesLandOnRightEdge) {
  const double alpha = 6.0 * std::numbers::pi / 180.0;
  const Sample s = testing_support::oracle_sample(0.1, 0.03, 6.0, 4e6);
  const Vec2 w(std::cos(alpha), std::sin(alpha));
  const BBox box{-3.0, 6.0, -2.5, 2.5};
  const TriMesh out = extend_to_bbox(s.mesh, box, w);
  out.validate();

  const SurfaceTrace tr = extract_surface(s.mesh);
  const double hole = polygon_signed_area(tr.loop_points());
  EXPECT_NEAR(total_area(out), box.area() - hole, 1e-9 * box.area());
  for (const auto& e : naive_boundary(out))
    if (!out.surface_mask[e[0]] || !out.surface_mask[e[1]]) {
      EXPECT_TRUE(on_rectangle(box, out.nodes[e[0]], 1e-9));
      EXPECT_TRUE(on_rectangle(box, out.nodes[e[1]], 1e-9));
    }

  // Wake tails: new nodes reached from an old outer node by moving along w.
  const std::vector<int> old_outer = outer_loop(s.mesh);
  int tails = 0;
  for (std::size_t i = s.mesh.nodes.size(); i < out.nodes.size(); ++i) {
    const Vec2& q = out.nodes[i];
    for (int v : old_outer) {
      const Vec2 d = q - s.mesh.nodes[v];
      if (d.norm() > 1e-9 && std::abs(d.x() * w.y() - d.y() * w.x()) <= 1e-12 * d.norm() && d.dot(w) > 0.0 &&
          std::abs(q.x() - box.xmax) < 1e-9) {
        ++tails;
        EXPECT_NEAR(q.x(), box.xmax, 1e-12);
      }
    }
  }
  EXPECT_GE(tails, 2);
}

TEST(ConstrainedTriangulate, ConvexQuadrilateral) {
  const Points quad{{0.0, 0.0}, {2.0, 0.1}, {2.2, 1.5}, {-0.1, 1.0}};
  const auto tris = constrained_triangulate(quad);
  ASSERT_EQ(tris.size(), 2u);
  double a = 0.0;
  for (const auto& t : tris) a += triangle_area(quad[t[0]], quad[t[1]], quad[t[2]]);
  EXPECT_NEAR(a, polygon_signed_area(quad), 1e-14);
}

TEST(ConstrainedTriangulate, SquareWithCentre) {
  const Points sq{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  const Points centre{{0.5, 0.5}};
  const auto tris = constrained_triangulate(sq, centre);
  ASSERT_EQ(tris.size(), 4u);
  Points all = sq;
  all.push_back(centre[0]);
  for (const auto& t : tris) EXPECT_NEAR(triangle_area(all[t[0]], all[t[1]], all[t[2]]), 0.25, 1e-15);
}

TEST(ConstrainedTriangulate, RandomStarPolygonMatchesShoelace) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> radius(0.5, 1.5), jitter(-0.2, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    Points poly;
    for (int k = 0; k < 12; ++k) {
      const double th = 2.0 * std::numbers::pi * (k + 0.5 + jitter(gen)) / 12.0;
      const double r = radius(gen);
      poly.emplace_back(r * std::cos(th), r * std::sin(th));
    }
    // Shoelace, written out independently.
    double shoelace = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& a = poly[i];
      const Vec2& b = poly[(i + 1) % poly.size()];
      shoelace += 0.5 * (a.x() * b.y() - b.x() * a.y());
    }
    const auto tris = constrained_triangulate(poly);
    ASSERT_EQ(tris.size(), 10u);
    double sum = 0.0;
    for (const auto& t : tris) {
      const double a = triangle_area(poly[t[0]], poly[t[1]], poly[t[2]]);
      EXPECT_GT(a, 0.0);
      sum += a;
    }
    EXPECT_NEAR(sum, shoelace, 1e-12);
  }
}

TEST(ConstrainedTriangulate, BowTieIsRejected) {
  const Points bow{{0.0, 0.0}, {1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}};
  try {
    constrained_triangulate(bow);
    FAIL() << "expected SelfIntersection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SelfIntersection);
  }
}

TEST(ClampedExtrapolate, NodesAffineAndExterior) {
  const BBox box{0.0, 2.0, -1.0, 1.0};
  const TriMesh m = grid_mesh(7, 5, box);
  std::vector<double> f(m.nodes.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 2.0 * m.nodes[i].x() - m.nodes[i].y();

  const std::vector<double> at_nodes = clamped_extrapolate(m, f, m.nodes);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(at_nodes[i], f[i], 1e-12);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ux(0.0, 2.0), uy(-1.0, 1.0), far(-3.0, 5.0);
  Points inside(200);
  for (auto& p : inside) p = {ux(gen), uy(gen)};
  const auto vin = clamped_extrapolate(m, f, inside);
  for (std::size_t i = 0; i < inside.size(); ++i) EXPECT_NEAR(vin[i], 2.0 * inside[i].x() - inside[i].y(), 1e-12);

  // Exterior: value at the nearest boundary point, by brute force over boundary edges.
  const auto edges = naive_boundary(m);
  Points outside;
  while (outside.size() < 200) {
    const Vec2 p(far(gen), far(gen));
    if (!box.contains(p, 1e-3)) outside.push_back(p);
  }
  const auto vout = clamped_extrapolate(m, f, outside);
  for (std::size_t i = 0; i < outside.size(); ++i) {
    double best = 1e300, value = 0.0;
    for (const auto& e : edges) {
      const Vec2 a = m.nodes[e[0]], b = m.nodes[e[1]];
      const double t = std::clamp((outside[i] - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
      const Vec2 c = a + t * (b - a);
      const double d = (c - outside[i]).norm();
      if (d < best) {
        best = d;
        value = 2.0 * c.x() - c.y();
      }
    }
    EXPECT_NEAR(vout[i], value, 1e-12);
  }
}

TEST(TriMesh, ValidateRejectsInvertedTriangle) {
  TriMesh m = grid_mesh(2, 2, {0.0, 1.0, 0.0, 1.0});
  std::swap(m.triangles[0][1], m.triangles[0][2]);
  EXPECT_EQ(m.bad_triangles(), std::vector<int>{0});
  EXPECT_THROW(m.validate(), Error);
}
