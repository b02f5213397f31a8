#include "mmgp/morph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mmgp {

std::vector<double> cosine_stations(int count) {
  std::vector<double> t(count);
  for (int k = 0; k < count; ++k)
    t[k] = count == 1 ? 0.0 : 0.5 * (1.0 - std::cos(std::numbers::pi * k / (count - 1)));
  if (count > 1) {
    t.front() = 0.0;
    t.back() = 1.0;
  }
  return t;
}

namespace {

Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

double exit_distance(const BBox& b, const Vec2& p, const Vec2& w) {
  double best = std::numeric_limits<double>::infinity();
  if (w.x() > 0.0) best = std::min(best, (b.xmax - p.x()) / w.x());
  if (w.x() < 0.0) best = std::min(best, (b.xmin - p.x()) / w.x());
  if (w.y() > 0.0) best = std::min(best, (b.ymax - p.y()) / w.y());
  if (w.y() < 0.0) best = std::min(best, (b.ymin - p.y()) / w.y());
  return best;
}

}  // namespace

ControlPointSet build_control_points(const TriMesh& pretreated, const SurfaceTrace& trace,
                                     const SurfaceTrace& common, double wake_angle, const BBox& bbox,
                                     const MorphOptions& opts) {
  for (const SurfaceTrace* tr : {&trace, &common})
    for (Side s : {Side::Intrado, Side::Extrado}) {
      if (tr->side(s).size() < 2 || !(tr->length(s) > 0.0))
        throw Error(Errc::AbscissaMismatch, "surface side with zero length");
      if (tr->side(s).size() < 8) throw Error(Errc::InvalidArgument, "surface side has fewer than 8 nodes");
    }
  if (!std::isfinite(wake_angle)) throw Error(Errc::InvalidArgument, "wake angle is not finite");

  ControlPointSet cps;
  auto add_station = [&](const Vec2& s, const Vec2& t, ControlLabel l) {
    for (const auto& q : cps.source)
      if ((q - s).norm() < opts.min_separation) return;
    cps.add(s, t, l);
  };
  const auto st = cosine_stations(opts.stations_per_side);
  // Both ends first so that they are never the ones skipped.
  add_station(trace.leading_point(), common.leading_point(), ControlLabel::Intrado);
  add_station(trace.trailing_point(), common.trailing_point(), ControlLabel::Intrado);
  for (std::size_t k = 1; k + 1 < st.size(); ++k)
    add_station(trace.point_at(Side::Intrado, st[k]), common.point_at(Side::Intrado, st[k]), ControlLabel::Intrado);
  for (std::size_t k = 1; k + 1 < st.size(); ++k)
    add_station(trace.point_at(Side::Extrado, st[k]), common.point_at(Side::Extrado, st[k]), ControlLabel::Extrado);

  const Vec2 te_s = trace.trailing_point();
  const Vec2 te_c = common.trailing_point();
  const Vec2 dir(std::cos(wake_angle), std::sin(wake_angle));
  auto wake_target = [&](const Vec2& p) -> Vec2 { return te_c + rotate(p - te_s, -wake_angle); };

  const double reach = opts.wake_reach * std::min(exit_distance(bbox, te_s, dir), exit_distance(bbox, te_c, Vec2(1.0, 0.0)));
  if (opts.wake_points > 0 && reach > opts.wake_start) {
    const double g = opts.wake_points > 1 ? std::pow(reach / opts.wake_start, 1.0 / (opts.wake_points - 1)) : 1.0;
    double r = opts.wake_start;
    for (int j = 0; j < opts.wake_points; ++j, r *= g) {
      const Vec2 p = te_s + r * dir;
      cps.add(p, wake_target(p), ControlLabel::Wake);
    }
  }

  // Boundary nodes of the rectangle.
  const double tol = 1e-9 * std::max(bbox.width(), bbox.height());
  const double cone = opts.cone_deg * std::numbers::pi / 180.0;
  struct RightNode {
    Vec2 p;
    bool in_cone;
    Vec2 target;
  };
  std::vector<RightNode> right;
  for (const auto& p : pretreated.nodes) {
    const bool on_l = std::abs(p.x() - bbox.xmin) <= tol, on_r = std::abs(p.x() - bbox.xmax) <= tol;
    const bool on_b = std::abs(p.y() - bbox.ymin) <= tol, on_t = std::abs(p.y() - bbox.ymax) <= tol;
    if (!(on_l || on_r || on_b || on_t)) continue;
    if (on_r && !on_b && !on_t) {
      const Vec2 v = p - te_s;
      const double dev = std::abs(std::atan2(v.x() * dir.y() - v.y() * dir.x(), v.dot(dir)));
      right.push_back({p, dev <= cone, p});
    } else {
      cps.add(p, p, ControlLabel::BBoxFixed);
    }
  }
  double lo_s = std::numeric_limits<double>::infinity(), hi_s = -lo_s;
  double lo_t = lo_s, hi_t = hi_s;
  if (dir.x() > 0.0) {
    const double y_hit = te_s.y() + dir.y() / dir.x() * (bbox.xmax - te_s.x());
    if (y_hit > bbox.ymin && y_hit < bbox.ymax) {
      lo_s = hi_s = y_hit;
      lo_t = hi_t = te_c.y();
    }
  }
  for (auto& rn : right) {
    if (!rn.in_cone) continue;
    rn.target = wake_target(rn.p);
    rn.target.x() = bbox.xmax;
    rn.target.y() = std::clamp(rn.target.y(), bbox.ymin + tol, bbox.ymax - tol);
    lo_s = std::min(lo_s, rn.p.y());
    hi_s = std::max(hi_s, rn.p.y());
    lo_t = std::min(lo_t, rn.target.y());
    hi_t = std::max(hi_t, rn.target.y());
  }
  const bool has_band = std::isfinite(lo_s);
  for (auto& rn : right) {
    if (!rn.in_cone && has_band) {
      const double y = rn.p.y();
      double yt = y;
      if (y >= hi_s) yt = bbox.ymax - (bbox.ymax - y) * (bbox.ymax - hi_t) / (bbox.ymax - hi_s);
      else if (y <= lo_s) yt = bbox.ymin + (y - bbox.ymin) * (lo_t - bbox.ymin) / (lo_s - bbox.ymin);
      else yt = lo_t + (y - lo_s) * (hi_t - lo_t) / (hi_s - lo_s);
      rn.target = {bbox.xmax, yt};
    }
    cps.add(rn.p, rn.target, ControlLabel::BBoxRight);
  }
  return cps;
}

double tps_kernel(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

RbfMorph rbf_fit(const ControlPointSet& controls, bool fast) {
  const auto n = static_cast<Eigen::Index>(controls.size());
  if (controls.target.size() != controls.source.size())
    throw Error(Errc::DimensionMismatch, "control source and target counts differ");
  if (n < 3) throw Error(Errc::SingularSystem, "fewer than three control points");

  RbfMorph m;
  m.sources = controls.source;
  for (const auto& p : controls.source) m.centre += p;
  m.centre /= static_cast<double>(n);
  double radius = 0.0;
  for (const auto& p : controls.source) radius = std::max(radius, (p - m.centre).norm());
  m.scale = radius > 0.0 ? radius : 1.0;

  Points s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = (controls.source[i] - m.centre) / m.scale;

  if (!fast) {
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a].x() < s[b].x(); });
    const double dup = 1e-12;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n && s[order[j]].x() - s[order[i]].x() <= dup; ++j)
        if ((s[order[j]] - s[order[i]]).norm() <= dup)
          throw Error(Errc::SingularSystem, "duplicated control point");
    Eigen::Index far = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if ((s[i] - s[0]).norm() > (s[far] - s[0]).norm()) far = i;
    double spread = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) spread = std::max(spread, std::abs(orient2d(s[0], s[far], s[i])));
    if (spread <= 1e-12) throw Error(Errc::SingularSystem, "collinear control points");
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 3, n + 3);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = A(j, i) = tps_kernel((s[i] - s[j]).norm());
    A(i, n) = A(n, i) = 1.0;
    A(i, n + 1) = A(n + 1, i) = s[i].x();
    A(i, n + 2) = A(n + 2, i) = s[i].y();
    rhs.row(i) = ((controls.target[i] - m.centre) / m.scale).transpose();
  }
  Eigen::MatrixXd sol;
  if (fast) {
    sol = A.partialPivLu().solve(rhs);
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw Error(Errc::SingularSystem, "thin-plate system is singular");
    sol = lu.solve(rhs);
  }
  if (!sol.allFinite()) throw Error(Errc::SingularSystem, "thin-plate solve produced non-finite weights");
  m.weights = sol.topRows(n);
  m.affine = sol.bottomRows(3);
  return m;
}

Vec2 RbfMorph::apply(const Vec2& p) const {
  const Vec2 q = (p - centre) / scale;
  Eigen::RowVector2d acc = affine.row(0) + q.x() * affine.row(1) + q.y() * affine.row(2);
  for (std::size_t i = 0; i < sources.size(); ++i)
    acc += tps_kernel((q - (sources[i] - centre) / scale).norm()) * weights.row(static_cast<Eigen::Index>(i));
  return centre + scale * acc.transpose();
}

Points rbf_apply(const RbfMorph& morph, std::span<const Vec2> nodes) {
  Points out;
  out.reserve(nodes.size());
  for (const auto& p : nodes) out.push_back(morph.apply(p));
  return out;
}

Eigen::VectorXd wake_angle_inputs(const SurfaceTrace& trace, double angle_of_attack, double inlet_speed, int stations) {
  Eigen::VectorXd x(2 + 2 * stations);
  x[0] = angle_of_attack;
  x[1] = inlet_speed;
  for (int i = 0; i < stations; ++i) {
    const double t = stations == 1 ? 0.5 : static_cast<double>(i) / (stations - 1);
    x[2 + i] = trace.point_at(Side::Intrado, t).y();
    x[2 + stations + i] = trace.point_at(Side::Extrado, t).y();
  }
  return x;
}

GpModel fit_wake_angle_model(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& angles, const GpTrainConfig& cfg) {
  if (inputs.rows() < 5) throw Error(Errc::InvalidArgument, "wake-angle model needs at least five samples");
  return gp_train(inputs, angles, cfg);
}

double predict_wake_angle(const GpModel& model, const Eigen::VectorXd& inputs) {
  return model.predict_mean(inputs);
}

}  // namespace mmgp
