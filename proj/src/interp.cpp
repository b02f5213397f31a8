#include "mmgp/interp.hpp"

#include <algorithm>
#include <limits>

namespace mmgp {

Location locate_exact(const TriangleLocator& locator, const Vec2& point) {
  auto hit = locator.locate(point);
  if (!hit) throw Error(Errc::NotFound, "point lies outside the mesh");
  return {hit->triangle, hit->bary};
}

Location locate_exact(const TriMesh& mesh, const Vec2& point) {
  return locate_exact(TriangleLocator(mesh), point);
}

FastLocator::FastLocator(const TriMesh& mesh, FastLocateOptions opts) : mesh_(&mesh), opts_(opts) {
  if (mesh.triangles.empty()) throw Error(Errc::InvalidMesh, "source mesh has no triangles");
  centres_.reserve(mesh.triangles.size());
  std::vector<BBox> boxes;
  boxes.reserve(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec2 c = mesh.centroid(static_cast<int>(t));
    centres_.push_back(c);
    boxes.push_back({c.x(), c.x(), c.y(), c.y()});
  }
  grid_ = BucketGrid(boxes, 4.0);
}

Location FastLocator::locate(const Vec2& p) const {
  const auto& nodes = mesh_->nodes;
  auto bary_of = [&](int t) {
    const Tri& tri = mesh_->triangles[t];
    return barycentric(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]], p);
  };
  Location best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int t : grid_.k_nearest(p, opts_.neighbours, centres_)) {
    const auto bc = bary_of(t);
    const double m = bc.minCoeff();
    if (m >= -1e-12 && m > best_min) {
      best_min = m;
      best = {t, bc};
    }
  }
  if (best.triangle < 0) {
    for (int t : grid_.within_radius(p, opts_.radius, centres_)) {
      const auto bc = bary_of(t);
      const double m = bc.minCoeff();
      if (m > best_min) {
        best_min = m;
        best = {t, bc};
      }
    }
    if (best.triangle < 0) throw Error(Errc::NoCandidate, "no triangle barycentre within the search radius");
  }
  const Eigen::Vector3d clipped = best.bary.cwiseMax(0.0);
  best.bary = clipped / clipped.sum();
  return best;
}

std::vector<Location> FastLocator::locate(std::span<const Vec2> queries) const {
  std::vector<Location> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(locate(q));
  return out;
}

std::vector<Location> locate_fast(const TriMesh& src, std::span<const Vec2> queries, FastLocateOptions opts) {
  return FastLocator(src, opts).locate(queries);
}

Eigen::MatrixXd interpolate(const TriMesh& src, std::span<const Location> locs, const Eigen::MatrixXd& fields) {
  if (static_cast<std::size_t>(fields.rows()) != src.nodes.size())
    throw Error(Errc::DimensionMismatch, "field rows do not match source node count");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(locs.size()), fields.cols());
  for (std::size_t i = 0; i < locs.size(); ++i) {
    const Tri& t = src.triangles[locs[i].triangle];
    const auto& w = locs[i].bary;
    out.row(static_cast<Eigen::Index>(i)) = w[0] * fields.row(t[0]) + w[1] * fields.row(t[1]) + w[2] * fields.row(t[2]);
  }
  return out;
}

Eigen::MatrixXd transfer_fields(const TriMesh& src, const Eigen::MatrixXd& fields, std::span<const Vec2> dst_points,
                                FastLocateOptions opts) {
  const auto locs = locate_fast(src, dst_points, opts);
  return interpolate(src, locs, fields);
}

void transfer_surface(const SurfaceTrace& src, const Eigen::MatrixXd& src_fields, const SurfaceTrace& dst,
                      Eigen::MatrixXd& dst_fields) {
  for (Side side : {Side::Intrado, Side::Extrado}) {
    const auto& s_idx = src.side(side);
    const auto& s_abs = src.abscissa(side);
    const double s_len = s_abs.back();
    const auto& d_idx = dst.side(side);
    const auto& d_abs = dst.abscissa(side);
    const double d_len = d_abs.back();
    if (!(s_len > 0.0) || !(d_len > 0.0)) throw Error(Errc::AbscissaMismatch, "surface side has zero length");
    for (std::size_t i = 0; i < d_idx.size(); ++i) {
      const double target = d_abs[i] / d_len * s_len;
      auto it = std::upper_bound(s_abs.begin(), s_abs.end(), target);
      std::size_t j = it == s_abs.end() ? s_abs.size() - 1 : static_cast<std::size_t>(it - s_abs.begin());
      j = std::max<std::size_t>(j, 1);
      const double w = std::clamp((target - s_abs[j - 1]) / (s_abs[j] - s_abs[j - 1]), 0.0, 1.0);
      dst_fields.row(d_idx[i]) = (1.0 - w) * src_fields.row(s_idx[j - 1]) + w * src_fields.row(s_idx[j]);
    }
  }
}

}  // namespace mmgp
