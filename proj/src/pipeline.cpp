#include "mmgp/pipeline.hpp"

#include "mmgp/features.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

namespace mmgp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class F>
auto staged(const char* stage, const std::string& id, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + (id.empty() ? "" : " [" + id + "]") + ": " + e.what());
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> robust_z(std::span<const double> x) {
  const double med = median({x.begin(), x.end()});
  std::vector<double> dev(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dev[i] = std::abs(x[i] - med);
  const double mad = 1.4826 * median(dev);
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mad > 0.0) z[i] = dev[i] / mad;
    else z[i] = dev[i] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return z;
}

struct Pretreated {
  TriMesh mesh;
  Eigen::MatrixXd fields;  // empty when no fields were supplied
  SurfaceTrace trace;
};

Pretreated pretreat(const TriMesh& mesh, const Eigen::MatrixXd* fields, double alpha, const PipelineConfig& cfg) {
  mesh.validate();
  Pretreated out;
  out.mesh = extend_to_bbox(mesh, cfg.bbox, Vec2(std::cos(alpha), std::sin(alpha)), cfg.extend);
  if (fields) {
    const std::size_t n = mesh.nodes.size();
    out.fields.resize(static_cast<Eigen::Index>(out.mesh.nodes.size()), fields->cols());
    out.fields.topRows(static_cast<Eigen::Index>(n)) = *fields;
    if (out.mesh.nodes.size() > n) {
      const std::span<const Vec2> added(out.mesh.nodes.data() + n, out.mesh.nodes.size() - n);
      for (Eigen::Index c = 0; c < fields->cols(); ++c) {
        std::vector<double> col(fields->col(c).data(), fields->col(c).data() + n);
        const auto ext = clamped_extrapolate(mesh, col, added);
        for (std::size_t k = 0; k < ext.size(); ++k) out.fields(static_cast<Eigen::Index>(n + k), c) = ext[k];
      }
    }
  }
  out.trace = extract_surface(out.mesh);
  return out;
}

TriMesh morphed_mesh(const Pretreated& p, const SurfaceTrace& common_trace, double wake_angle,
                     const PipelineConfig& cfg) {
  const ControlPointSet controls =
      build_control_points(p.mesh, p.trace, common_trace, wake_angle, cfg.bbox, cfg.morph);
  const RbfMorph morph = rbf_fit(controls, true);
  TriMesh m = p.mesh;
  m.nodes = rbf_apply(morph, p.mesh.nodes);
  return m;
}

/// Values of `values` (rows per sample node) at the common nodes. Off-surface
/// nodes are located in the morphed sample mesh; surface nodes follow the
/// normalized abscissa.
Eigen::MatrixXd gather_on_common(const MmgpModel& model, const TriMesh& morphed, const SurfaceTrace& trace,
                                 const Eigen::MatrixXd& values) {
  const TriMesh& common = model.common;
  std::vector<int> interior;
  Points queries;
  for (std::size_t i = 0; i < common.nodes.size(); ++i) {
    if (common.surface_mask[i]) continue;
    interior.push_back(static_cast<int>(i));
    queries.push_back(common.nodes[i]);
  }
  const FastLocator loc(morphed, model.config.locate);
  const auto locs = loc.locate(queries);
  const Eigen::MatrixXd inner = interpolate(morphed, locs, values);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(common.nodes.size()), values.cols());
  for (std::size_t k = 0; k < interior.size(); ++k) out.row(interior[k]) = inner.row(static_cast<Eigen::Index>(k));
  transfer_surface(trace, values, model.common_trace, out);
  return out;
}

/// Inverse transfer from the common mesh to a sample mesh.
Eigen::MatrixXd scatter_to_sample(const MmgpModel& model, const FastLocator& common_loc, const TriMesh& morphed,
                                  const SurfaceTrace& trace, const Eigen::MatrixXd& common_values) {
  std::vector<int> interior;
  Points queries;
  for (std::size_t i = 0; i < morphed.nodes.size(); ++i) {
    if (morphed.surface_mask[i]) continue;
    interior.push_back(static_cast<int>(i));
    queries.push_back(morphed.nodes[i]);
  }
  const auto locs = common_loc.locate(queries);
  const Eigen::MatrixXd inner = interpolate(model.common, locs, common_values);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(morphed.nodes.size()), common_values.cols());
  for (std::size_t k = 0; k < interior.size(); ++k) out.row(interior[k]) = inner.row(static_cast<Eigen::Index>(k));
  transfer_surface(model.common_trace, common_values, trace, out);
  return out;
}

Eigen::VectorXd stack_columns(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXd v(n * static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) v.segment(static_cast<Eigen::Index>(k) * n, n) = m.col(cols[k]);
  return v;
}

Eigen::VectorXd scalar_inputs(const MmgpModel& model, const QueryCase& q, const Pretreated& p) {
  std::vector<double> v{q.speed * std::cos(q.alpha), q.speed * std::sin(q.alpha)};
  if (model.reynolds_input) v.push_back(q.reynolds / 1e6);
  if (model.config.surface_features) {
    const Eigen::VectorXd f =
        surface_feature_summary(p.mesh, p.trace, Vec2(q.speed * std::cos(q.alpha), q.speed * std::sin(q.alpha)));
    v.insert(v.end(), f.data(), f.data() + f.size());
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

struct GroupLayout {
  const char* name;
  std::vector<int> columns;
  bool velocity_inputs;
  int modes;
};

std::vector<GroupLayout> group_layouts(const PipelineConfig& cfg) {
  return {{"velocity", {Ux, Uy}, false, cfg.velocity_modes},
          {"pressure", {Pressure}, true, cfg.pressure_modes},
          {"nu_t", {NuT}, false, cfg.nut_modes}};
}

GpTrainConfig gp_config_from(const KeyValueConfig& kv, const std::string& prefix, GpTrainConfig c) {
  c.steps = kv.get(prefix + ".steps", c.steps);
  c.lr = kv.get(prefix + ".lr", c.lr);
  c.gamma = kv.get(prefix + ".gamma", c.gamma);
  c.decay_every = kv.get(prefix + ".decay_every", c.decay_every);
  c.weight_decay = kv.get(prefix + ".weight_decay", c.weight_decay);
  c.standardize_targets = kv.get(prefix + ".standardize_targets", c.standardize_targets);
  return c;
}

nlohmann::json gp_config_json(const GpTrainConfig& c) {
  return {{"steps", c.steps},         {"lr", c.lr},       {"gamma", c.gamma},
          {"decay_every", c.decay_every}, {"beta1", c.beta1}, {"beta2", c.beta2},
          {"eps", c.eps},             {"weight_decay", c.weight_decay}, {"standardize_targets", c.standardize_targets}};
}

GpTrainConfig gp_config_from_json(const nlohmann::json& j) {
  GpTrainConfig c;
  c.steps = j.at("steps").get<int>();
  c.lr = j.at("lr").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.decay_every = j.at("decay_every").get<int>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.standardize_targets = j.at("standardize_targets").get<bool>();
  return c;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json gp_json(const GpModel& g) {
  return {{"log_constant", g.params.log_constant},
          {"log_lengthscales", to_std(g.params.log_lengthscales)},
          {"log_noise", g.params.log_noise},
          {"input_mean", to_std(g.input_scaler.mean)},
          {"input_scale", to_std(g.input_scaler.scale)},
          {"target_mean", g.target_mean},
          {"target_scale", g.target_scale},
          {"jitter", g.jitter},
          {"initial_nlml", g.initial_nlml},
          {"final_nlml", g.final_nlml}};
}

GpModel gp_from_json(const nlohmann::json& j) {
  GpModel g;
  g.params.log_constant = j.at("log_constant").get<double>();
  g.params.log_lengthscales = from_std(j.at("log_lengthscales").get<std::vector<double>>());
  g.params.log_noise = j.at("log_noise").get<double>();
  g.input_scaler.mean = from_std(j.at("input_mean").get<std::vector<double>>());
  g.input_scaler.scale = from_std(j.at("input_scale").get<std::vector<double>>());
  g.target_mean = j.at("target_mean").get<double>();
  g.target_scale = j.at("target_scale").get<double>();
  g.jitter = j.at("jitter").get<double>();
  g.initial_nlml = j.at("initial_nlml").get<double>();
  g.final_nlml = j.at("final_nlml").get<double>();
  return g;
}

void save_pod(const PodBasis& pod, const fs::path& arrays, const std::string& name) {
  write_array(arrays / (name + "_mean.f64"), pod.mean);
  write_array(arrays / (name + "_modes.f64"), pod.modes);
  write_array(arrays / (name + "_sv.f64"), pod.singular_values);
}

PodBasis load_pod(const fs::path& arrays, const std::string& name, Eigen::Index size, int rank) {
  PodBasis pod;
  pod.mean = read_array(arrays / (name + "_mean.f64"), size, 1);
  pod.modes = read_array(arrays / (name + "_modes.f64"), size, rank);
  pod.singular_values = read_array(arrays / (name + "_sv.f64"), rank, 1);
  return pod;
}

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads) {
  if (n == 0) return;
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, n);
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t w) {
    for (std::size_t i = w; i < n; i += workers) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

PipelineConfig PipelineConfig::from_config(const KeyValueConfig& kv) {
  PipelineConfig c;
  c.shape_modes = kv.get("model.shape_modes", c.shape_modes);
  c.velocity_modes = kv.get("model.velocity_modes", c.velocity_modes);
  c.pressure_modes = kv.get("model.pressure_modes", c.pressure_modes);
  c.nut_modes = kv.get("model.nut_modes", c.nut_modes);
  c.outlier_k = kv.get("model.outlier_k", c.outlier_k);
  c.surface_features = kv.get("model.surface_features", c.surface_features);
  c.wake_stations = kv.get("model.wake_stations", c.wake_stations);
  c.threads = kv.get("model.threads", c.threads);
  c.bbox.xmin = kv.get("mesh.xmin", c.bbox.xmin);
  c.bbox.xmax = kv.get("mesh.xmax", c.bbox.xmax);
  c.bbox.ymin = kv.get("mesh.ymin", c.bbox.ymin);
  c.bbox.ymax = kv.get("mesh.ymax", c.bbox.ymax);
  c.gp = gp_config_from(kv, "gp", c.gp);
  c.wake_gp = gp_config_from(kv, "wake_gp", c.wake_gp);
  c.morph.stations_per_side = kv.get("morph.stations_per_side", c.morph.stations_per_side);
  c.morph.wake_points = kv.get("morph.wake_points", c.morph.wake_points);
  c.morph.wake_start = kv.get("morph.wake_start", c.morph.wake_start);
  c.morph.wake_reach = kv.get("morph.wake_reach", c.morph.wake_reach);
  c.morph.cone_deg = kv.get("morph.cone_deg", c.morph.cone_deg);
  c.extend.cone_deg = kv.get("extend.cone_deg", c.extend.cone_deg);
  c.extend.perimeter_divisions = kv.get("extend.perimeter_divisions", c.extend.perimeter_divisions);
  c.locate.neighbours = kv.get("locate.neighbours", c.locate.neighbours);
  c.locate.radius = kv.get("locate.radius", c.locate.radius);
  if (c.shape_modes < 0 || c.velocity_modes < 0 || c.pressure_modes < 0 || c.nut_modes < 0)
    throw Error(Errc::InvalidArgument, "mode counts must be non-negative");
  if (!(c.outlier_k > 0.0)) throw Error(Errc::InvalidArgument, "outlier threshold must be positive");
  return c;
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"shape_modes", shape_modes},
          {"velocity_modes", velocity_modes},
          {"pressure_modes", pressure_modes},
          {"nut_modes", nut_modes},
          {"outlier_k", std::isfinite(outlier_k) ? nlohmann::json(outlier_k) : nlohmann::json(nullptr)},
          {"surface_features", surface_features},
          {"wake_stations", wake_stations},
          {"bbox", {bbox.xmin, bbox.xmax, bbox.ymin, bbox.ymax}},
          {"gp", gp_config_json(gp)},
          {"wake_gp", gp_config_json(wake_gp)},
          {"morph",
           {{"stations_per_side", morph.stations_per_side},
            {"wake_points", morph.wake_points},
            {"wake_start", morph.wake_start},
            {"wake_reach", morph.wake_reach},
            {"cone_deg", morph.cone_deg}}},
          {"extend", {{"cone_deg", extend.cone_deg}, {"perimeter_divisions", extend.perimeter_divisions}}},
          {"locate", {{"neighbours", locate.neighbours}, {"radius", locate.radius}}}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  c.shape_modes = j.at("shape_modes").get<int>();
  c.velocity_modes = j.at("velocity_modes").get<int>();
  c.pressure_modes = j.at("pressure_modes").get<int>();
  c.nut_modes = j.at("nut_modes").get<int>();
  c.outlier_k =
      j.at("outlier_k").is_null() ? std::numeric_limits<double>::infinity() : j.at("outlier_k").get<double>();
  c.surface_features = j.at("surface_features").get<bool>();
  c.wake_stations = j.at("wake_stations").get<int>();
  const auto b = j.at("bbox").get<std::vector<double>>();
  if (b.size() != 4) throw Error(Errc::Format, "bbox needs four values");
  c.bbox = {b[0], b[1], b[2], b[3]};
  c.gp = gp_config_from_json(j.at("gp"));
  c.wake_gp = gp_config_from_json(j.at("wake_gp"));
  const auto& m = j.at("morph");
  c.morph.stations_per_side = m.at("stations_per_side").get<int>();
  c.morph.wake_points = m.at("wake_points").get<int>();
  c.morph.wake_start = m.at("wake_start").get<double>();
  c.morph.wake_reach = m.at("wake_reach").get<double>();
  c.morph.cone_deg = m.at("cone_deg").get<double>();
  c.extend.cone_deg = j.at("extend").at("cone_deg").get<double>();
  c.extend.perimeter_divisions = j.at("extend").at("perimeter_divisions").get<int>();
  c.locate.neighbours = j.at("locate").at("neighbours").get<int>();
  c.locate.radius = j.at("locate").at("radius").get<double>();
  return c;
}

OutlierReport flag_outliers(std::span<const double> cl, std::span<const double> cd, double k) {
  if (cl.size() != cd.size()) throw Error(Errc::LengthMismatch, "lift and drag lists differ in length");
  OutlierReport r;
  const auto zl = robust_z(cl), zd = robust_z(cd);
  r.score.resize(cl.size());
  for (std::size_t i = 0; i < cl.size(); ++i) {
    r.score[i] = std::max(zl[i], zd[i]);
    (r.score[i] > k ? r.rejected : r.kept).push_back(static_cast<int>(i));
  }
  return r;
}

Forces surface_forces(const Points& loop, std::span<const double> pressure, double alpha, double speed, double chord) {
  if (loop.size() != pressure.size()) throw Error(Errc::LengthMismatch, "pressure and loop lengths differ");
  if (loop.size() < 3) throw Error(Errc::InvalidArgument, "surface loop needs at least three points");
  if (!(speed > 0.0) || !(chord > 0.0)) throw Error(Errc::InvalidArgument, "speed and chord must be positive");
  Vec2 f = Vec2::Zero();
  const std::size_t n = loop.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t k1 = (k + 1) % n;
    const Vec2 t = loop[k1] - loop[k];
    f -= 0.5 * (pressure[k] + pressure[k1]) * Vec2(t.y(), -t.x());
  }
  const double q = 0.5 * speed * speed * chord;
  Forces out;
  out.cl = f.dot(Vec2(-std::sin(alpha), std::cos(alpha))) / q;
  out.cd = f.dot(Vec2(std::cos(alpha), std::sin(alpha))) / q;
  return out;
}

Forces surface_forces(const TriMesh& mesh, const SurfaceTrace& trace, std::span<const double> pressure, double alpha,
                      double speed) {
  const Points loop = trace.loop_points();
  std::vector<double> p(trace.loop.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < trace.loop.size(); ++k) {
    p[k] = pressure[trace.loop[k]];
    lo = std::min(lo, mesh.nodes[trace.loop[k]].x());
    hi = std::max(hi, mesh.nodes[trace.loop[k]].x());
  }
  return surface_forces(loop, p, alpha, speed, hi - lo);
}

const FieldGroup& MmgpModel::group(const std::string& name) const {
  for (const auto& g : groups)
    if (g.name == name) return g;
  throw Error(Errc::NotFound, "no field group named " + name);
}

int MmgpModel::scalar_input_count() const { return 2 + (reynolds_input ? 1 : 0) + (config.surface_features ? 4 : 0); }

MmgpModel train_mmgp(const std::vector<Sample>& train, const PipelineConfig& cfg, TrainReport* report) {
  const auto t0 = Clock::now();
  if (train.size() < 3) throw Error(Errc::InvalidArgument, "training needs at least three samples");

  std::vector<double> cl, cd;
  for (const auto& s : train) {
    cl.push_back(s.info.cl);
    cd.push_back(s.info.cd);
  }
  const OutlierReport outliers = flag_outliers(cl, cd, cfg.outlier_k);
  if (outliers.kept.size() < 3)
    throw Error(Errc::InvalidArgument, "fewer than three training samples survive outlier filtering");

  MmgpModel model;
  model.config = cfg;
  for (int i : outliers.rejected) model.rejected_ids.push_back(train[i].info.id);
  std::vector<const Sample*> kept;
  for (int i : outliers.kept) {
    kept.push_back(&train[i]);
    model.train_ids.push_back(train[i].info.id);
  }
  const std::size_t m = kept.size();

  std::vector<Pretreated> pre(m);
  parallel_for(m, [&](std::size_t i) {
    pre[i] = staged("pretreat", kept[i]->info.id,
                    [&] { return pretreat(kept[i]->mesh, &kept[i]->fields, kept[i]->info.alpha, cfg); });
  }, cfg.threads);

  // Wake angle regressor; the training wake follows the inlet direction.
  Eigen::MatrixXd wake_x(m, 2 + 2 * cfg.wake_stations);
  Eigen::VectorXd wake_y(m);
  for (std::size_t i = 0; i < m; ++i) {
    wake_x.row(i) = wake_angle_inputs(pre[i].trace, kept[i]->info.alpha, kept[i]->info.speed, cfg.wake_stations);
    wake_y[i] = kept[i]->info.alpha;
  }
  model.wake = staged("wake-angle", "", [&] {
    return m >= 5 ? fit_wake_angle_model(wake_x, wake_y, cfg.wake_gp)
                  : gp_fit(wake_x, wake_y, GpParams::ones(static_cast<int>(wake_x.cols())));
  });

  // Common mesh: the first sample with its wake turned onto the horizontal.
  model.common = staged("common-mesh", kept[0]->info.id,
                        [&] { return morphed_mesh(pre[0], pre[0].trace, kept[0]->info.alpha, cfg); });
  model.common.validate();
  model.common_trace = extract_surface(model.common);

  const Eigen::Index N = static_cast<Eigen::Index>(model.common.nodes.size());
  const auto layouts = group_layouts(cfg);
  Eigen::MatrixXd shape_snap(2 * N, static_cast<Eigen::Index>(m));
  std::vector<Eigen::MatrixXd> snaps;
  for (const auto& g : layouts) snaps.emplace_back(N * static_cast<Eigen::Index>(g.columns.size()), m);
  std::vector<TriMesh> morphed(m);
  parallel_for(m, [&](std::size_t i) {
    const std::string& id = kept[i]->info.id;
    morphed[i] = staged("morph", id, [&] { return morphed_mesh(pre[i], model.common_trace, kept[i]->info.alpha, cfg); });
    Eigen::MatrixXd values(pre[i].fields.rows(), 2 + kFieldCount);
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      values(r, 0) = pre[i].mesh.nodes[r].x();
      values(r, 1) = pre[i].mesh.nodes[r].y();
    }
    values.rightCols(kFieldCount) = pre[i].fields;
    const Eigen::MatrixXd on_common =
        staged("transfer", id, [&] { return gather_on_common(model, morphed[i], pre[i].trace, values); });
    shape_snap.col(i) << on_common.col(0), on_common.col(1);
    for (std::size_t g = 0; g < layouts.size(); ++g)
      snaps[g].col(i) = stack_columns(on_common.rightCols(kFieldCount), layouts[g].columns);
  }, cfg.threads);

  const int cap = static_cast<int>(m) - 1;
  model.shape = staged("pod", "shape", [&] { return fit_pod(shape_snap, std::min(cfg.shape_modes, cap)); });
  for (std::size_t g = 0; g < layouts.size(); ++g) {
    FieldGroup fg;
    fg.name = layouts[g].name;
    fg.columns = layouts[g].columns;
    fg.velocity_inputs = layouts[g].velocity_inputs;
    fg.pod = staged("pod", fg.name, [&] { return fit_pod(snaps[g], std::min(layouts[g].modes, cap)); });
    model.groups.push_back(std::move(fg));
  }

  double re_lo = std::numeric_limits<double>::infinity(), re_hi = -re_lo;
  for (const auto* s : kept) {
    re_lo = std::min(re_lo, s->info.reynolds);
    re_hi = std::max(re_hi, s->info.reynolds);
  }
  model.reynolds_input = re_hi - re_lo > 1e-9 * re_hi;

  // GP inputs: shape coefficients and inlet scalars, plus velocity coefficients for pressure.
  const int rs = model.shape.rank();
  const int ns = model.scalar_input_count();
  Eigen::MatrixXd base(m, rs + ns);
  for (std::size_t i = 0; i < m; ++i) {
    base.row(i) << model.shape.project(shape_snap.col(i)).transpose(),
        scalar_inputs(model, query_of(kept[i]->info), pre[i]).transpose();
  }
  std::vector<Eigen::MatrixXd> coefs;
  for (std::size_t g = 0; g < layouts.size(); ++g) {
    const PodBasis& pod = model.groups[g].pod;
    Eigen::MatrixXd c(m, pod.rank());
    for (std::size_t i = 0; i < m; ++i) c.row(i) = pod.project(snaps[g].col(i)).transpose();
    coefs.push_back(std::move(c));
  }
  const Eigen::MatrixXd& vel_coefs = coefs[0];
  for (std::size_t g = 0; g < layouts.size(); ++g) {
    FieldGroup& fg = model.groups[g];
    Eigen::MatrixXd X = base;
    if (fg.velocity_inputs) {
      X.conservativeResize(Eigen::NoChange, base.cols() + vel_coefs.cols());
      X.rightCols(vel_coefs.cols()) = vel_coefs;
    }
    fg.gps.resize(fg.pod.rank());
    parallel_for(fg.gps.size(), [&](std::size_t k) {
      fg.gps[k] = staged("gp", fg.name + "#" + std::to_string(k), [&] { return gp_train(X, coefs[g].col(k), cfg.gp); });
    }, cfg.threads);
  }

  // Projection error of the training set, measured on each sample's own mesh.
  const FastLocator common_loc(model.common, cfg.locate);
  std::vector<std::array<double, kFieldCount>> err(m);
  parallel_for(m, [&](std::size_t i) {
    Eigen::MatrixXd common_fields(N, kFieldCount);
    for (std::size_t g = 0; g < layouts.size(); ++g) {
      const PodBasis& pod = model.groups[g].pod;
      const Eigen::VectorXd rec = pod.reconstruct(pod.project(snaps[g].col(i)));
      for (std::size_t k = 0; k < layouts[g].columns.size(); ++k)
        common_fields.col(layouts[g].columns[k]) = rec.segment(static_cast<Eigen::Index>(k) * N, N);
    }
    const Eigen::MatrixXd back = scatter_to_sample(model, common_loc, morphed[i], pre[i].trace, common_fields);
    const Eigen::Index n = kept[i]->fields.rows();
    for (int c = 0; c < kFieldCount; ++c) {
      const Eigen::VectorXd pred = back.col(c).head(n);
      const Eigen::VectorXd truth = kept[i]->fields.col(c);
      err[i][c] = relative_l2(std::span<const double>(pred.data(), pred.size()),
                              std::span<const double>(truth.data(), truth.size()));
    }
  }, cfg.threads);
  for (int c = 0; c < kFieldCount; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += err[i][c];
    model.reconstruction_error[field_names()[c]] = acc / static_cast<double>(m);
  }

  if (report) {
    report->outliers = outliers;
    report->seconds = seconds_since(t0);
  }
  return model;
}

Prediction predict_mmgp(const MmgpModel& model, const TriMesh& mesh, const QueryCase& q) {
  Prediction out;
  auto t = Clock::now();
  auto lap = [&t](double& slot) {
    const auto now = Clock::now();
    slot += std::chrono::duration<double>(now - t).count();
    t = now;
  };

  const Pretreated p = staged("pretreat", "", [&] { return pretreat(mesh, nullptr, q.alpha, model.config); });
  const FastLocator common_loc(model.common, model.config.locate);
  lap(out.times.pretreat);

  out.wake_angle =
      predict_wake_angle(model.wake, wake_angle_inputs(p.trace, q.alpha, q.speed, model.config.wake_stations));
  const TriMesh morphed =
      staged("morph", "", [&] { return morphed_mesh(p, model.common_trace, out.wake_angle, model.config); });
  lap(out.times.morph);

  Eigen::MatrixXd coords(static_cast<Eigen::Index>(p.mesh.nodes.size()), 2);
  for (std::size_t r = 0; r < p.mesh.nodes.size(); ++r) coords.row(static_cast<Eigen::Index>(r)) = p.mesh.nodes[r];
  const Eigen::MatrixXd shape_common = staged("transfer", "", [&] { return gather_on_common(model, morphed, p.trace, coords); });
  Eigen::VectorXd shape_field(2 * shape_common.rows());
  shape_field << shape_common.col(0), shape_common.col(1);
  const Eigen::VectorXd base = concat(model.shape.project(shape_field), scalar_inputs(model, q, p));
  lap(out.times.project);

  std::vector<Eigen::VectorXd> coefs(model.groups.size());
  Eigen::VectorXd vel_coefs;
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    if (model.groups[g].velocity_inputs) continue;
    const auto& fg = model.groups[g];
    coefs[g].resize(fg.pod.rank());
    for (int k = 0; k < fg.pod.rank(); ++k) coefs[g][k] = fg.gps[k].predict_mean(base);
    if (fg.name == "velocity") vel_coefs = coefs[g];
  }
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    if (!model.groups[g].velocity_inputs) continue;
    const auto& fg = model.groups[g];
    const Eigen::VectorXd x = concat(base, vel_coefs);
    coefs[g].resize(fg.pod.rank());
    for (int k = 0; k < fg.pod.rank(); ++k) coefs[g][k] = fg.gps[k].predict_mean(x);
  }
  lap(out.times.gp);

  const Eigen::Index N = static_cast<Eigen::Index>(model.common.nodes.size());
  Eigen::MatrixXd common_fields(N, kFieldCount);
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    const auto& fg = model.groups[g];
    const Eigen::VectorXd rec = fg.pod.reconstruct(coefs[g]);
    for (std::size_t k = 0; k < fg.columns.size(); ++k)
      common_fields.col(fg.columns[k]) = rec.segment(static_cast<Eigen::Index>(k) * N, N);
  }
  lap(out.times.reconstruct);

  const Eigen::MatrixXd back =
      staged("inverse-transfer", "", [&] { return scatter_to_sample(model, common_loc, morphed, p.trace, common_fields); });
  out.fields = back.topRows(static_cast<Eigen::Index>(mesh.nodes.size()));
  const Eigen::VectorXd pressure = back.col(Pressure);
  out.forces = surface_forces(p.mesh, p.trace, std::span<const double>(pressure.data(), pressure.size()), q.alpha,
                              q.speed);
  lap(out.times.inverse);
  return out;
}

SplitMetrics split_metrics(const std::vector<Sample>& truth, const std::vector<Eigen::MatrixXd>& fields,
                           std::span<const double> cl, std::span<const double> cd) {
  const std::size_t n = truth.size();
  if (n == 0) throw Error(Errc::EmptyCategory, "no samples to evaluate");
  if (fields.size() != n || cl.size() != n || cd.size() != n)
    throw Error(Errc::LengthMismatch, "prediction count differs from sample count");
  SplitMetrics out;
  const char* names[] = {"u_x", "u_y", "p", "nu_t"};
  double acc[5] = {0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = truth[i];
    if (fields[i].rows() != s.fields.rows() || fields[i].cols() != kFieldCount)
      throw Error(Errc::DimensionMismatch, "predicted field shape differs for " + s.info.id);
    for (int c = 0; c < kFieldCount; ++c) {
      const Eigen::VectorXd a = fields[i].col(c), b = s.fields.col(c);
      acc[c] += relative_l2(std::span<const double>(a.data(), a.size()), std::span<const double>(b.data(), b.size()));
    }
    std::vector<double> ps, ts;
    for (Eigen::Index r = 0; r < s.fields.rows(); ++r) {
      if (!s.mesh.surface_mask[r]) continue;
      ps.push_back(fields[i](r, Pressure));
      ts.push_back(s.fields(r, Pressure));
    }
    acc[4] += relative_l2(ps, ts);
  }
  for (int c = 0; c < 4; ++c) out.values[names[c]] = acc[c] / static_cast<double>(n);
  out.values["p_s"] = acc[4] / static_cast<double>(n);

  std::vector<double> tl, td;
  for (const auto& s : truth) {
    tl.push_back(s.info.cl);
    td.push_back(s.info.cd);
  }
  const RelativeError el = mean_relative_error(cl, tl), ed = mean_relative_error(cd, td);
  out.values["C_L"] = el.value;
  out.values["C_D"] = ed.value;
  out.zero_truth_excluded = el.excluded + ed.excluded;
  const SpearmanResult rl = spearman(cl, tl), rd = spearman(cd, td);
  out.values["rho_L"] = rl.value;
  out.values["rho_D"] = rd.value;
  out.lift_zero_variance = rl.zero_variance;
  out.drag_zero_variance = rd.zero_variance;
  return out;
}

void save_model(const MmgpModel& model, const fs::path& dir) {
  const fs::path arrays = dir / "arrays";
  fs::create_directories(arrays);
  write_mesh_csv(dir / "common", model.common);
  save_pod(model.shape, arrays, "shape");

  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : model.groups) {
    save_pod(g.pod, arrays, g.name);
    nlohmann::json gps = nlohmann::json::array();
    Eigen::MatrixXd inputs, alpha;
    if (!g.gps.empty()) {
      inputs = g.gps.front().train_inputs;
      alpha.resize(inputs.rows(), static_cast<Eigen::Index>(g.gps.size()));
      for (std::size_t k = 0; k < g.gps.size(); ++k) {
        if (g.gps[k].train_inputs != inputs) throw Error(Errc::Format, "GP inputs differ inside group " + g.name);
        alpha.col(static_cast<Eigen::Index>(k)) = g.gps[k].alpha;
        gps.push_back(gp_json(g.gps[k]));
      }
      write_array(arrays / (g.name + "_inputs.f64"), inputs);
      write_array(arrays / (g.name + "_alpha.f64"), alpha);
    }
    groups.push_back({{"name", g.name},
                      {"columns", g.columns},
                      {"velocity_inputs", g.velocity_inputs},
                      {"rank", g.pod.rank()},
                      {"size", g.pod.size()},
                      {"inputs", {inputs.rows(), inputs.cols()}},
                      {"gps", gps}});
  }
  write_array(arrays / "wake_inputs.f64", model.wake.train_inputs);
  write_array(arrays / "wake_alpha.f64", model.wake.alpha);

  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"kind", "mmgp"},
                   {"config", model.config.to_json()},
                   {"provenance",
                    {{"dataset_hash", model.dataset_hash},
                     {"seed", model.seed},
                     {"train_ids", model.train_ids},
                     {"rejected_ids", model.rejected_ids}}},
                   {"common", {{"nodes", model.common.nodes.size()}, {"triangles", model.common.triangles.size()}}},
                   {"reynolds_input", model.reynolds_input},
                   {"shape", {{"rank", model.shape.rank()}, {"size", model.shape.size()}}},
                   {"groups", groups},
                   {"wake",
                    {{"gp", gp_json(model.wake)},
                     {"inputs", {model.wake.train_inputs.rows(), model.wake.train_inputs.cols()}}}},
                   {"reconstruction_error", model.reconstruction_error}};
  write_json(dir / "model.json", j);
}

MmgpModel load_model(const fs::path& dir) {
  const nlohmann::json j = read_json(dir / "model.json");
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw Error(Errc::Format, "unsupported model schema");
    const fs::path arrays = dir / "arrays";
    MmgpModel model;
    model.config = PipelineConfig::from_json(j.at("config"));
    const auto& prov = j.at("provenance");
    model.dataset_hash = prov.at("dataset_hash").get<std::string>();
    model.seed = prov.at("seed").get<std::uint64_t>();
    model.train_ids = prov.at("train_ids").get<std::vector<std::string>>();
    model.rejected_ids = prov.at("rejected_ids").get<std::vector<std::string>>();
    model.common = read_mesh_csv(dir / "common");
    model.common.validate();
    model.common_trace = extract_surface(model.common);
    model.reynolds_input = j.at("reynolds_input").get<bool>();
    model.shape = load_pod(arrays, "shape", j.at("shape").at("size").get<Eigen::Index>(),
                           j.at("shape").at("rank").get<int>());
    for (const auto& gj : j.at("groups")) {
      FieldGroup g;
      g.name = gj.at("name").get<std::string>();
      g.columns = gj.at("columns").get<std::vector<int>>();
      g.velocity_inputs = gj.at("velocity_inputs").get<bool>();
      const int rank = gj.at("rank").get<int>();
      g.pod = load_pod(arrays, g.name, gj.at("size").get<Eigen::Index>(), rank);
      if (rank > 0) {
        const auto shape = gj.at("inputs").get<std::vector<Eigen::Index>>();
        const Eigen::MatrixXd inputs = read_array(arrays / (g.name + "_inputs.f64"), shape[0], shape[1]);
        const Eigen::MatrixXd alpha = read_array(arrays / (g.name + "_alpha.f64"), shape[0], rank);
        for (int k = 0; k < rank; ++k) {
          GpModel gp = gp_from_json(gj.at("gps").at(k));
          gp.train_inputs = inputs;
          gp.alpha = alpha.col(k);
          g.gps.push_back(std::move(gp));
        }
      }
      model.groups.push_back(std::move(g));
    }
    const auto& wj = j.at("wake");
    model.wake = gp_from_json(wj.at("gp"));
    const auto ws = wj.at("inputs").get<std::vector<Eigen::Index>>();
    model.wake.train_inputs = read_array(arrays / "wake_inputs.f64", ws[0], ws[1]);
    model.wake.alpha = read_array(arrays / "wake_alpha.f64", ws[0], 1);
    model.reconstruction_error = j.at("reconstruction_error").get<std::map<std::string, double>>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("malformed model.json: ") + e.what());
  }
}

}  // namespace mmgp
