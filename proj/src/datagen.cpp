#include "mmgp/datagen.hpp"

#include "mmgp/features.hpp"
#include "mmgp/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numbers>

namespace mmgp {

using cplx = std::complex<double>;

namespace {

constexpr cplx I(0.0, 1.0);

cplx to_z(const AirfoilCase& cs, const Vec2& p) { return {p.x() - cs.offset.x(), p.y() - cs.offset.y()}; }
Vec2 to_world(const AirfoilCase& cs, cplx z) { return {z.real() + cs.offset.x(), z.imag() + cs.offset.y()}; }

cplx joukowski_map(const AirfoilCase& cs, cplx zeta) { return zeta + cs.c * cs.c / zeta; }

// Exterior preimage of z under the Joukowski map.
cplx invert(const AirfoilCase& cs, cplx z) {
  const cplx s = std::sqrt(z * z - 4.0 * cs.c * cs.c);
  const cplx r1 = 0.5 * (z + s), r2 = 0.5 * (z - s);
  return std::abs(r1 - cs.mu) >= std::abs(r2 - cs.mu) ? r1 : r2;
}

cplx conj_velocity(const AirfoilCase& cs, cplx zeta) {
  const double U = cs.speed, a = cs.a, G = cs.circulation();
  const cplx ea = std::exp(I * cs.alpha);
  const cplx d = zeta - cs.mu;
  const double c = cs.c;
  if (std::abs(zeta - c) < 1e-6 * c) {
    const cplx dc = c - cs.mu;
    const cplx w2 = 2.0 * U * a * a * ea / (dc * dc * dc) + I * G / (2.0 * std::numbers::pi * dc * dc);
    return w2 * c / 2.0;
  }
  const cplx w1 = U * (std::conj(ea) - a * a * ea / (d * d)) - I * G / (2.0 * std::numbers::pi * d);
  return w1 / (1.0 - c * c / (zeta * zeta));
}

FlowState state_from(const AirfoilCase& cs, cplx w) {
  FlowState f;
  f.ux = w.real();
  f.uy = -w.imag();
  f.p = 0.5 * (cs.speed * cs.speed - (f.ux * f.ux + f.uy * f.uy));
  return f;
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

AirfoilCase AirfoilCase::joukowski(double eps, double eta, double alpha, double reynolds, double nu, double c,
                                   bool centre_offset) {
  AirfoilCase cs;
  cs.c = c;
  cs.mu = c * cplx(-eps, eta);
  cs.a = std::abs(c - cs.mu);
  cs.alpha = alpha;
  cs.reynolds = reynolds;
  cs.offset = centre_offset ? Vec2(2.0 * c, 0.0) : Vec2::Zero();
  cs.validate();
  cs.chord = geometric_chord(cs);
  cs.speed = reynolds * nu / cs.chord;
  return cs;
}

double AirfoilCase::circulation() const { return -4.0 * std::numbers::pi * a * speed * std::sin(alpha + beta()); }

void AirfoilCase::validate() const {
  if (!(a > 0.0) || !(c > 0.0)) throw Error(Errc::InvalidArgument, "circle radius and map parameter must be positive");
  if (std::abs(std::abs(c - mu) - a) > 1e-12 * a)
    throw Error(Errc::SelfIntersection, "circle does not pass through the trailing-edge singularity");
  if (std::abs(mu + c) > a * (1.0 + 1e-12))
    throw Error(Errc::SelfIntersection, "circle leaves the second singular point outside; the map folds");
  if (!(reynolds > 0.0)) throw Error(Errc::InvalidArgument, "Reynolds number must be positive");
  if (!(speed > 0.0)) throw Error(Errc::InvalidArgument, "inlet speed must be positive");
}

namespace {

// Image of the circle sampled uniformly in the circle angle, starting at the trailing edge.
Points circle_image(const AirfoilCase& cs, int n_points) {
  const double theta_te = std::arg(cs.c - cs.mu);
  Points out;
  out.reserve(n_points);
  for (int j = 0; j < n_points; ++j) {
    const double th = theta_te + 2.0 * std::numbers::pi * j / n_points;
    const cplx zeta = j == 0 ? cplx(cs.c, 0.0) : cs.mu + cs.a * std::exp(I * th);
    out.push_back(to_world(cs, joukowski_map(cs, zeta)));
  }
  return out;
}

}  // namespace

Points joukowski_surface(const AirfoilCase& cs, int n_points) {
  if (n_points < 32) throw Error(Errc::InvalidArgument, "at least 32 surface points are required");
  cs.validate();
  // Uniform circle angles crowd the trailing edge quadratically, so the nodes
  // are placed by arc length instead, blended with a cosine cluster at both
  // ends of each side. Every node is still evaluated on the mapped circle.
  const double theta_te = std::arg(cs.c - cs.mu);
  const int m = 64 * n_points;
  std::vector<double> theta(m + 1), arc(m + 1, 0.0);
  Points dense(m + 1);
  for (int j = 0; j <= m; ++j) {
    theta[j] = theta_te + 2.0 * std::numbers::pi * j / m;
    const cplx zeta = (j == 0 || j == m) ? cplx(cs.c, 0.0) : cs.mu + cs.a * std::exp(I * theta[j]);
    dense[j] = to_world(cs, joukowski_map(cs, zeta));
    if (j) arc[j] = arc[j - 1] + (dense[j] - dense[j - 1]).norm();
  }
  int le = 0;
  for (int j = 1; j < m; ++j)
    if (dense[j].x() < dense[le].x()) le = j;

  auto point_at_arc = [&](double s) {
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    const int k = std::clamp(static_cast<int>(it - arc.begin()), 1, m);
    const double span = arc[k] - arc[k - 1];
    const double f = span > 0.0 ? (s - arc[k - 1]) / span : 0.0;
    const double th = theta[k - 1] + f * (theta[k] - theta[k - 1]);
    return to_world(cs, joukowski_map(cs, cs.mu + cs.a * std::exp(I * th)));
  };
  auto spacing = [](double u) { return 0.25 * u + 0.75 * 0.5 * (1.0 - std::cos(std::numbers::pi * u)); };

  const int first = n_points / 2;
  const int second = n_points - first;
  Points out;
  out.reserve(n_points);
  out.push_back(to_world(cs, joukowski_map(cs, cplx(cs.c, 0.0))));
  for (int j = 1; j < first; ++j) out.push_back(point_at_arc(arc[le] * spacing(static_cast<double>(j) / first)));
  out.push_back(dense[le]);
  for (int j = 1; j < second; ++j)
    out.push_back(point_at_arc(arc[le] + (arc[m] - arc[le]) * spacing(static_cast<double>(j) / second)));
  return out;
}

FlowState solve_potential_flow(const AirfoilCase& cs, const Vec2& point) {
  const cplx zeta = invert(cs, to_z(cs, point));
  if (std::abs(zeta - cs.mu) < cs.a * (1.0 - 1e-9)) throw Error(Errc::InsideBody, "point lies inside the airfoil");
  return state_from(cs, conj_velocity(cs, zeta));
}

std::vector<FlowState> solve_potential_flow(const AirfoilCase& cs, std::span<const Vec2> points) {
  std::vector<FlowState> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(solve_potential_flow(cs, p));
  return out;
}

Vec2 stagnation_point(const AirfoilCase& cs) {
  const cplx zeta = cs.mu + cs.a * std::exp(I * (std::numbers::pi + 2.0 * cs.alpha + cs.beta()));
  return to_world(cs, joukowski_map(cs, zeta));
}

double geometric_chord(const AirfoilCase& cs, int n_dense) {
  const Points s = circle_image(cs, n_dense);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : s) {
    lo = std::min(lo, p.x());
    hi = std::max(hi, p.x());
  }
  return hi - lo;
}

double thickness_ratio(const AirfoilCase& cs, int n_dense) {
  const Points s = circle_image(cs, n_dense);
  std::size_t le = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i].x() < s[le].x()) le = i;
  // Upper side runs from the trailing edge to the leading edge, lower side back.
  Points lower(s.begin() + static_cast<std::ptrdiff_t>(le), s.end());
  lower.push_back(s.front());
  double best = 0.0;
  for (std::size_t i = 0; i <= le; ++i) {
    const Vec2& p = s[i];
    for (std::size_t k = 1; k < lower.size(); ++k) {
      const Vec2 &a = lower[k - 1], &b = lower[k];
      if ((a.x() - p.x()) * (b.x() - p.x()) <= 0.0 && a.x() != b.x()) {
        const double y = a.y() + (p.x() - a.x()) / (b.x() - a.x()) * (b.y() - a.y());
        best = std::max(best, p.y() - y);
        break;
      }
    }
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : s) {
    lo = std::min(lo, p.x());
    hi = std::max(hi, p.x());
  }
  return best / (hi - lo);
}

Forces forces(const AirfoilCase& cs) {
  Forces f;
  f.cl = -2.0 * cs.circulation() / (cs.speed * cs.chord);
  const double cf = 0.074 * std::pow(cs.reynolds, -0.2);
  f.cd = 2.0 * cf * (1.0 + 2.0 * thickness_ratio(cs));
  return f;
}

std::vector<double> synthetic_nu_t(const TriMesh& mesh, const AirfoilCase& cs, const NuTConfig& cfg) {
  const SurfaceTrace tr = extract_surface(mesh);
  const SurfaceDistance sd = surface_distance(mesh, tr);
  const auto mask = boundary_layer_mask(sd.distance, cfg.tau);
  const Vec2 te = to_world(cs, cplx(2.0 * cs.c, 0.0));
  const Vec2 w(std::cos(cs.alpha), std::sin(cs.alpha));
  const double level = cfg.nu * cfg.kappa * (cs.reynolds / 1e6);
  std::vector<double> out(mesh.nodes.size());
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const Vec2 r = mesh.nodes[i] - te;
    const double s = r.dot(w);
    const double n = w.x() * r.y() - w.y() * r.x();
    const double width = cfg.wake_width + cfg.wake_spread * std::max(s, 0.0);
    const double wake = 1.0 + cfg.wake_amplitude * std::exp(-(n / width) * (n / width)) * smoothstep(s / 0.05);
    out[i] = level * mask[i] * wake;
  }
  return out;
}

double boundary_layer_thickness(double reynolds, const VelocityDamping& d) {
  return d.delta0 * std::pow(reynolds / 1e6, -0.2);
}

TriMesh generate_mesh(std::span<const Vec2> surface, const BBox& bbox, int ring_count, double growth,
                      double first_height, const Vec2& wake_direction) {
  if (!(growth > 1.0)) throw Error(Errc::InvalidArgument, "ring growth must exceed 1");
  if (ring_count < 1) throw Error(Errc::InvalidArgument, "at least one ring is required");
  const int n = static_cast<int>(surface.size());
  if (n < 3) throw Error(Errc::InvalidArgument, "surface needs at least three points");
  if (polygon_signed_area(surface) <= 0.0) throw Error(Errc::InvalidArgument, "surface must be counter-clockwise");

  TriMesh mesh;
  mesh.nodes.assign(surface.begin(), surface.end());
  mesh.surface_mask.assign(n, 1);
  Points ring(surface.begin(), surface.end());
  double h = first_height;
  for (int k = 1; k <= ring_count; ++k, h *= growth) {
    std::vector<Vec2> normal(n);
    for (int j = 0; j < n; ++j) {
      const Vec2 t = ring[(j + 1) % n] - ring[(j + n - 1) % n];
      normal[j] = Vec2(t.y(), -t.x()).normalized();
    }
    const int sweeps = std::min(2 * k, 24);
    for (int it = 0; it < sweeps; ++it) {
      std::vector<Vec2> next(n);
      for (int j = 0; j < n; ++j)
        next[j] = (0.5 * normal[j] + 0.25 * (normal[(j + n - 1) % n] + normal[(j + 1) % n])).normalized();
      normal.swap(next);
    }
    const int base_in = static_cast<int>(mesh.nodes.size()) - n;
    const int base_out = static_cast<int>(mesh.nodes.size());
    for (int j = 0; j < n; ++j) {
      ring[j] += h * normal[j];
      mesh.nodes.push_back(ring[j]);
      mesh.surface_mask.push_back(0);
    }
    const auto& P = mesh.nodes;
    for (int j = 0; j < n; ++j) {
      const int A = base_in + j, B = base_in + (j + 1) % n;
      const int C = base_out + (j + 1) % n, D = base_out + j;
      const double s1 = std::min(triangle_area(P[A], P[D], P[C]), triangle_area(P[A], P[C], P[B]));
      const double s2 = std::min(triangle_area(P[A], P[D], P[B]), triangle_area(P[B], P[D], P[C]));
      if (std::max(s1, s2) <= 0.0)
        throw Error(Errc::InvalidMesh, "offset ring " + std::to_string(k) + " folds at node " + std::to_string(j));
      if (s1 >= s2) {
        mesh.triangles.push_back({A, D, C});
        mesh.triangles.push_back({A, C, B});
      } else {
        mesh.triangles.push_back({A, D, B});
        mesh.triangles.push_back({B, D, C});
      }
    }
  }
  return extend_to_bbox(mesh, bbox, wake_direction);
}

DatasetConfig DatasetConfig::from_config(const KeyValueConfig& kv) {
  DatasetConfig c;
  c.n_train = kv.get("dataset.train", c.n_train);
  c.n_test = kv.get("dataset.test", c.n_test);
  c.n_ood = kv.get("dataset.ood", c.n_ood);
  c.seed = kv.get_u64("dataset.seed", c.seed);
  c.nu = kv.get("dataset.nu", c.nu);
  c.eps_min = kv.get("dataset.eps_min", c.eps_min);
  c.eps_max = kv.get("dataset.eps_max", c.eps_max);
  c.eta_min = kv.get("dataset.eta_min", c.eta_min);
  c.eta_max = kv.get("dataset.eta_max", c.eta_max);
  c.alpha_min_deg = kv.get("dataset.alpha_min_deg", c.alpha_min_deg);
  c.alpha_max_deg = kv.get("dataset.alpha_max_deg", c.alpha_max_deg);
  c.re_min = kv.get("dataset.re_min", c.re_min);
  c.re_max = kv.get("dataset.re_max", c.re_max);
  c.ood_low_min = kv.get("dataset.ood_low_min", c.ood_low_min);
  c.ood_high_max = kv.get("dataset.ood_high_max", c.ood_high_max);
  c.reference_time_s = kv.get("dataset.reference_time_s", c.reference_time_s);
  c.mesh.n_surface = kv.get("mesh.n_surface", c.mesh.n_surface);
  c.mesh.rings = kv.get("mesh.rings", c.mesh.rings);
  c.mesh.first_height = kv.get("mesh.first_height", c.mesh.first_height);
  c.mesh.growth = kv.get("mesh.growth", c.mesh.growth);
  c.mesh.bbox.xmin = kv.get("mesh.xmin", c.mesh.bbox.xmin);
  c.mesh.bbox.xmax = kv.get("mesh.xmax", c.mesh.bbox.xmax);
  c.mesh.bbox.ymin = kv.get("mesh.ymin", c.mesh.bbox.ymin);
  c.mesh.bbox.ymax = kv.get("mesh.ymax", c.mesh.bbox.ymax);
  c.nut.kappa = kv.get("nut.kappa", c.nut.kappa);
  c.nut.tau = kv.get("nut.tau", c.nut.tau);
  c.damping.delta0 = kv.get("dataset.delta0", c.damping.delta0);
  c.nut.nu = c.nu;
  if (c.n_train < 1 || c.n_test < 1 || c.n_ood < 1)
    throw Error(Errc::InvalidArgument, "every split needs at least one sample");
  if (!(c.eps_min > 0.0 && c.eps_max >= c.eps_min && c.eta_max >= c.eta_min && c.re_max > c.re_min &&
        c.re_min > c.ood_low_min && c.ood_high_max > c.re_max && c.ood_low_min > 0.0))
    throw Error(Errc::InvalidArgument, "inconsistent dataset parameter ranges");
  return c;
}

nlohmann::json DatasetConfig::to_json() const {
  return nlohmann::json{
      {"train", n_train},
      {"test", n_test},
      {"ood", n_ood},
      {"seed", seed},
      {"nu", nu},
      {"eps", {eps_min, eps_max}},
      {"eta", {eta_min, eta_max}},
      {"alpha_deg", {alpha_min_deg, alpha_max_deg}},
      {"reynolds", {re_min, re_max}},
      {"reynolds_ood", {ood_low_min, re_min, re_max, ood_high_max}},
      {"reference_time_s", reference_time_s},
      {"mesh",
       {{"n_surface", mesh.n_surface},
        {"rings", mesh.rings},
        {"first_height", mesh.first_height},
        {"growth", mesh.growth},
        {"bbox", {mesh.bbox.xmin, mesh.bbox.xmax, mesh.bbox.ymin, mesh.bbox.ymax}}}},
      {"nut", {{"kappa", nut.kappa}, {"tau", nut.tau}}},
      {"delta0", damping.delta0},
  };
}

std::uint64_t sample_seed(std::uint64_t seed, const std::string& split, int index) {
  return derive_seed(derive_seed(seed, fnv1a(split)), static_cast<std::uint64_t>(index));
}

CaseDraw draw_case(std::uint64_t seed, bool ood, const DatasetConfig& cfg) {
  SplitMix64 rng(seed);
  CaseDraw d;
  d.eps = rng.uniform(cfg.eps_min, cfg.eps_max);
  d.eta = rng.uniform(cfg.eta_min, cfg.eta_max);
  d.alpha = rng.uniform(cfg.alpha_min_deg, cfg.alpha_max_deg) * std::numbers::pi / 180.0;
  if (!ood) {
    d.reynolds = rng.uniform(cfg.re_min, cfg.re_max);
  } else {
    // uniform() lies in (0, 1], so both bands keep their inner end open.
    const double low = cfg.re_min - cfg.ood_low_min, high = cfg.ood_high_max - cfg.re_max;
    const double u = rng.uniform() * (low + high);
    d.reynolds = u < low ? cfg.re_min - u : cfg.re_max + (u - low);
  }
  return d;
}

Sample make_oracle_sample(const CaseDraw& draw, const DatasetConfig& cfg) {
  const AirfoilCase cs = AirfoilCase::joukowski(draw.eps, draw.eta, draw.alpha, draw.reynolds, cfg.nu);
  const Points surface = joukowski_surface(cs, cfg.mesh.n_surface);
  Sample s;
  s.mesh = generate_mesh(surface, cfg.mesh.bbox, cfg.mesh.rings, cfg.mesh.growth, cfg.mesh.first_height,
                         Vec2(std::cos(cs.alpha), std::sin(cs.alpha)));
  const SurfaceTrace tr = extract_surface(s.mesh);
  const SurfaceDistance sd = surface_distance(s.mesh, tr);
  const double delta = boundary_layer_thickness(cs.reynolds, cfg.damping);
  const auto flow = solve_potential_flow(cs, s.mesh.nodes);
  const auto nut = synthetic_nu_t(s.mesh, cs, cfg.nut);
  const std::size_t n = s.mesh.nodes.size();
  s.fields.resize(static_cast<Eigen::Index>(n), kFieldCount);
  for (std::size_t i = 0; i < n; ++i) {
    const double damp = s.mesh.surface_mask[i] ? 0.0 : std::tanh(sd.distance[i] / delta);
    s.fields(i, Ux) = damp * flow[i].ux;
    s.fields(i, Uy) = damp * flow[i].uy;
    s.fields(i, Pressure) = flow[i].p;
    s.fields(i, NuT) = nut[i];
  }
  const Forces f = forces(cs);
  SampleInfo& info = s.info;
  info.eps = draw.eps;
  info.eta = draw.eta;
  info.alpha = cs.alpha;
  info.reynolds = cs.reynolds;
  info.speed = cs.speed;
  info.chord = cs.chord;
  info.mu_re = cs.mu.real();
  info.mu_im = cs.mu.imag();
  info.radius = cs.a;
  info.map_c = cs.c;
  info.offset_x = cs.offset.x();
  info.offset_y = cs.offset.y();
  info.cl = f.cl;
  info.cd = f.cd;
  info.reference_time_s = cfg.reference_time_s;
  return s;
}

DatasetReport generate_dataset(const DatasetConfig& cfg, const fs::path& out) {
  DatasetReport report;
  nlohmann::json index{{"schema_version", kSchemaVersion}, {"config", cfg.to_json()}};
  const std::pair<const char*, int> splits[] = {{"train", cfg.n_train}, {"test", cfg.n_test}, {"ood", cfg.n_ood}};
  for (const auto& [split, count] : splits) {
    nlohmann::json ids = nlohmann::json::array();
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%04d", i);
      const std::uint64_t seed = sample_seed(cfg.seed, split, i);
      const auto t0 = std::chrono::steady_clock::now();
      Sample s = make_oracle_sample(draw_case(seed, std::string(split) == "ood", cfg), cfg);
      report.oracle_seconds[std::string(split) + "/" + name] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      s.info.id = name;
      s.info.split = split;
      s.info.seed = seed;
      write_sample(out / split / name, s);
      ids.push_back(name);
      ++report.samples;
    }
    index["splits"][split] = ids;
  }
  write_json(out / "dataset.json", index);
  return report;
}

}  // namespace mmgp
