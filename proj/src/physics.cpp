#include "reveal/physics.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "reveal/error.hpp"

namespace reveal {

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(stencil_step >= 0.0) || !std::isfinite(stencil_step)) {
    throw ConfigError("stencil_step must be positive (0 selects one cell pitch)");
  }
  if (mls_neighbors < 6) throw ConfigError("mls_neighbors must be at least 6");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (early_stopping && patience == 0) throw ConfigError("patience must be positive");
  if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
}

// ---------------------------------------------------------------------------

namespace {

// Offsets and weights of a three-point second difference along one axis.
struct AxisRule {
  double offsets[3];
  bool shifted;
};

AxisRule axis_rule(double c, double h, double lo, double hi) {
  if (c - h >= lo && c + h <= hi) return {{-h, 0.0, h}, false};
  if (c - h < lo && c + 2.0 * h <= hi) return {{0.0, h, 2.0 * h}, true};
  if (c + h > hi && c - 2.0 * h >= lo) return {{-2.0 * h, -h, 0.0}, true};
  throw std::invalid_argument("stencil step does not fit inside the domain");
}

}  // namespace

Stencil laplacian_stencil(const UnitPoint& p, double h, double lo, double hi) {
  if (!(h > 0.0)) throw std::invalid_argument("stencil step must be positive");
  const AxisRule ru = axis_rule(p.u, h, lo, hi);
  const AxisRule rv = axis_rule(p.v, h, lo, hi);
  const double w[3] = {1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)};

  Stencil s;
  s.one_sided = ru.shifted || rv.shifted;
  auto add = [&s](UnitPoint q, double weight) {
    for (auto& t : s.taps) {
      if (t.point == q) {
        t.weight += weight;
        return;
      }
    }
    s.taps.push_back({q, weight});
  };
  for (int k = 0; k < 3; ++k) add({p.u + ru.offsets[k], p.v}, w[k]);
  for (int k = 0; k < 3; ++k) add({p.u, p.v + rv.offsets[k]}, w[k]);
  return s;
}

LaplacianValue fd_laplacian(const std::function<double(double, double)>& f, const UnitPoint& p,
                            double h, double lo, double hi) {
  const Stencil s = laplacian_stencil(p, h, lo, hi);
  std::vector<double> v;
  v.reserve(s.taps.size());
  double center = 0.0;
  for (const auto& t : s.taps) {
    v.push_back(f(t.point.u, t.point.v));
    if (!std::isfinite(v.back())) throw NumericError("non-finite field value in stencil");
    if (t.point == p) center = v.back();
  }
  // Weights sum to zero; accumulate differences against the center value.
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) acc += s.taps[k].weight * (v[k] - center);
  return {acc, s.one_sided};
}

LaplacianValue fd_laplacian(const MlpModel& m, const UnitPoint& p, double h) {
  const Stencil s = laplacian_stencil(p, h);
  std::vector<UnitPoint> pts;
  pts.reserve(s.taps.size());
  for (const auto& t : s.taps) pts.push_back(t.point);
  const std::vector<double> out = predict(m, pts);
  double acc = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!std::isfinite(out[k])) throw NumericError("non-finite network output in stencil");
    acc += s.taps[k].weight * out[k];
  }
  return {acc, s.one_sided};
}

double mls_laplacian(std::span<const Point> points, std::span<const double> values, const Point& p,
                     std::size_t k) {
  if (points.size() != values.size()) throw std::invalid_argument("points and values differ in length");
  if (k < 6) throw std::invalid_argument("MLS needs at least 6 neighbors");
  if (points.size() < 6) throw std::invalid_argument("MLS needs at least 6 samples");
  k = std::min(k, points.size());

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> dist(points.size());
  for (std::size_t n = 0; n < points.size(); ++n) dist[n] = distance(points[n], p);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; });

  const double bw = dist[order[k - 1]];
  if (!(bw > 0.0) || !std::isfinite(bw)) throw NumericError("degenerate neighborhood");

  const auto rows = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd a(rows, 6);
  Eigen::VectorXd b(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t n = order[static_cast<std::size_t>(r)];
    const double dx = (points[n].x - p.x) / bw;
    const double dy = (points[n].y - p.y) / bw;
    const double sw = std::exp(-0.5 * (dist[n] / bw) * (dist[n] / bw));
    a.row(r) << sw, sw * dx, sw * dy, sw * dx * dx, sw * dy * dy, sw * dx * dy;
    b(r) = sw * values[n];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 6) throw NumericError("degenerate neighborhood");
  const Eigen::VectorXd c = qr.solve(b);
  const double lap = 2.0 * (c(3) + c(4)) / (bw * bw);
  if (!std::isfinite(lap)) throw NumericError("degenerate neighborhood");
  return lap;
}

double mls_laplacian(const ObservationSet& obs, const Point& p, std::size_t k) {
  return mls_laplacian(obs.points, obs.rssi_dbm, p, k);
}

// ---------------------------------------------------------------------------

TargetScaling TargetScaling::fit(std::span<const double> dbm) {
  if (dbm.empty()) throw std::invalid_argument("cannot standardize an empty set");
  const double n = static_cast<double>(dbm.size());
  const double mean = std::accumulate(dbm.begin(), dbm.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : dbm) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  return {mean, sd > 0.0 ? sd : 1.0};
}

TrainingSet make_training_set(const Grid& frame, const ObservationSet& train, const ObservationSet& val) {
  train.validate();
  if (!val.points.empty()) val.validate();
  std::set<std::pair<double, double>> seen;
  for (const auto& p : train.points) seen.insert({p.x, p.y});
  for (std::size_t n = 0; n < val.points.size(); ++n) {
    if (seen.count({val.points[n].x, val.points[n].y}) != 0) {
      throw ConfigError(fmt::format("validation point {} is also a training point", n));
    }
  }

  TrainingSet set{frame, TargetScaling::fit(train.rssi_dbm), {}, {}, {}, {}};
  for (std::size_t n = 0; n < train.size(); ++n) {
    set.train_points.push_back(frame.normalize(train.points[n]));
    set.train_targets.push_back(set.scaling.to_model(train.rssi_dbm[n]));
  }
  for (std::size_t n = 0; n < val.size(); ++n) {
    set.val_points.push_back(frame.normalize(val.points[n]));
    set.val_targets.push_back(set.scaling.to_model(val.rssi_dbm[n]));
  }
  return set;
}

LaplacianTargets laplacian_targets(const TrainingSet& set, std::size_t k) {
  std::vector<Point> pts;
  pts.reserve(set.train_points.size());
  for (const auto& q : set.train_points) pts.push_back({q.u, q.v});
  LaplacianTargets t;
  t.values.reserve(pts.size());
  for (const auto& p : pts) t.values.push_back(mls_laplacian(pts, set.train_targets, p, k));
  return t;
}

// ---------------------------------------------------------------------------

double data_loss(const MlpModel& m, std::span<const UnitPoint> points, std::span<const double> targets) {
  if (points.empty()) throw std::invalid_argument("data loss needs at least one point");
  if (points.size() != targets.size()) throw std::invalid_argument("points and targets differ in length");
  const std::vector<double> out = predict(m, points);
  double acc = 0.0;
  for (std::size_t n = 0; n < out.size(); ++n) acc += (out[n] - targets[n]) * (out[n] - targets[n]);
  return acc / static_cast<double>(out.size());
}

double physics_loss(const MlpModel& m, std::span<const UnitPoint> points, const LaplacianTargets& targets,
                    double h) {
  if (points.empty()) throw std::invalid_argument("physics loss needs at least one point");
  if (points.size() != targets.values.size()) throw std::invalid_argument("targets not aligned with points");
  double acc = 0.0;
  for (std::size_t n = 0; n < points.size(); ++n) {
    const double r = fd_laplacian(m, points[n], h).value - targets.values[n];
    acc += r * r;
  }
  return acc / static_cast<double>(points.size());
}

double default_stencil_step(const Grid& frame) {
  return 1.0 / static_cast<double>(std::max(frame.rows(), frame.cols()));
}

// ---------------------------------------------------------------------------

void write_train_report_csv(const TrainReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,L_d,L_p,L_total,val_L_d\n";
  for (std::size_t e = 0; e < r.total_loss.size(); ++e) {
    out << fmt::format("{},{},{},{},", e + 1, r.data_loss[e], r.physics_loss[e], r.total_loss[e]);
    if (e < r.val_data_loss.size()) out << fmt::format("{}", r.val_data_loss[e]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

double RemModel::predict(const Point& p) const {
  const UnitPoint q = frame.normalize(p);
  return scaling.to_dbm(reveal::predict(net, std::span<const UnitPoint>(&q, 1))[0]);
}

std::vector<double> RemModel::predict(std::span<const Point> points) const {
  std::vector<UnitPoint> q;
  q.reserve(points.size());
  for (const auto& p : points) q.push_back(frame.normalize(p));
  std::vector<double> out = reveal::predict(net, q);
  for (double& v : out) v = scaling.to_dbm(v);
  return out;
}

void write_rem_model(const std::filesystem::path& path, const RemModel& m, std::uint64_t seed,
                     nlohmann::json metadata) {
  metadata["frame"] = to_json(m.frame);
  metadata["scaling"] = {{"mean_dbm", m.scaling.mean}, {"stddev_db", m.scaling.stddev}};
  write_checkpoint(path, {m.net, seed, std::move(metadata)});
}

StoredRemModel read_rem_model(const std::filesystem::path& path) {
  Checkpoint ck = read_checkpoint(path);
  try {
    const auto& sc = ck.metadata.at("scaling");
    StoredRemModel out{{ck.model, grid_from_json(ck.metadata.at("frame")),
                        {sc.at("mean_dbm").get<double>(), sc.at("stddev_db").get<double>()}},
                       ck.seed,
                       ck.metadata};
    if (!(out.model.scaling.stddev > 0.0)) throw IoError("non-positive target scale");
    return out;
  } catch (const std::exception& e) {
    throw IoError("checkpoint lacks a usable frame or scaling: " + path.string() + ": " + e.what());
  }
}

namespace {

// Queries and the matching tape loss for one prior. Data queries come first
// and run in train mode; physics queries run in eval mode.
struct Objective {
  std::vector<Query> queries;
  std::size_t n_data = 0;
  LossFn loss;
  // Physics term from eval-mode outputs at queries[n_data...].
  std::function<double(std::span<const double>)> physics_value;
};

Objective build_objective(const TrainingSet& set, const PhysicsPrior& prior, double lambda, double h) {
  Objective obj;
  obj.n_data = set.train_points.size();
  for (const auto& p : set.train_points) obj.queries.push_back({p, Mode::train});

  // For each training point, (first tap query, tap weights).
  std::vector<std::pair<std::size_t, std::vector<double>>> stencils;
  std::vector<double> reference;
  if (const auto* lp = std::get_if<LaplacianPrior>(&prior)) {
    if (lp->targets.values.size() != obj.n_data) throw std::invalid_argument("targets not aligned with points");
    reference = lp->targets.values;
    for (const auto& p : set.train_points) {
      const Stencil s = laplacian_stencil(p, h);
      std::vector<double> w;
      stencils.push_back({obj.queries.size(), {}});
      for (const auto& t : s.taps) {
        obj.queries.push_back({t.point, Mode::eval});
        w.push_back(t.weight);
      }
      stencils.back().second = std::move(w);
    }
  } else {
    const auto& sp = std::get<SurfacePrior>(prior);
    if (sp.values.size() != obj.n_data) throw std::invalid_argument("surface not aligned with points");
    reference = sp.values;
    for (std::size_t n = 0; n < obj.n_data; ++n) {
      stencils.push_back({obj.queries.size(), {1.0}});
      obj.queries.push_back({set.train_points[n], Mode::eval});
    }
  }

  const std::vector<double> targets = set.train_targets;
  const std::size_t n_data = obj.n_data;
  obj.loss = [targets, reference, stencils, n_data, lambda](ad::Tape&, std::span<const ad::Var> out) {
    std::vector<ad::Var> d;
    d.reserve(n_data);
    for (std::size_t n = 0; n < n_data; ++n) d.push_back(ad::square(out[n] - targets[n]));
    const ad::Var ld = ad::mean(d);
    if (lambda == 0.0) return ld;
    std::vector<ad::Var> r;
    r.reserve(n_data);
    for (std::size_t n = 0; n < n_data; ++n) {
      const auto& [first, w] = stencils[n];
      ad::Var acc = out[first] * w[0];
      for (std::size_t t = 1; t < w.size(); ++t) acc = acc + out[first + t] * w[t];
      r.push_back(ad::square(acc - reference[n]));
    }
    return (1.0 - lambda) * ld + lambda * ad::mean(r);
  };
  obj.physics_value = [reference, stencils, n_data](std::span<const double> phys_out) {
    double acc = 0.0;
    for (std::size_t n = 0; n < n_data; ++n) {
      const auto& [first, w] = stencils[n];
      double v = 0.0;
      for (std::size_t t = 0; t < w.size(); ++t) v += w[t] * phys_out[first - n_data + t];
      acc += (v - reference[n]) * (v - reference[n]);
    }
    return acc / static_cast<double>(n_data);
  };
  return obj;
}

}  // namespace

TrainResult train(const MlpModel& m0, const TrainingSet& set, const PhysicsPrior& prior, const LossConfig& cfg,
                  std::uint64_t seed) {
  cfg.validate();
  m0.spec.validate();
  if (set.train_points.empty()) throw ConfigError("training set is empty");
  const auto t0 = std::chrono::steady_clock::now();
  const double h = cfg.stencil_step > 0.0 ? cfg.stencil_step : default_stencil_step(set.frame);
  const double lambda = cfg.lambda;

  const Objective obj = build_objective(set, prior, lambda, h);
  // lambda = 0: backprop through the data queries only, L_p forward-only.
  const std::span<const Query> grad_queries =
      lambda == 0.0 ? std::span<const Query>(obj.queries).first(obj.n_data) : std::span<const Query>(obj.queries);
  std::vector<UnitPoint> phys_points;
  for (std::size_t q = obj.n_data; q < obj.queries.size(); ++q) phys_points.push_back(obj.queries[q].point);

  MlpModel m = m0;
  AdamState adam = AdamState::for_model(m);
  Rng dropout_rng(derive_seed(seed, stream::dropout));

  TrainResult result{{m, set.frame, set.scaling}, {}};
  TrainReport& rep = result.report;
  rep.lambda = lambda;
  const bool has_val = !set.val_points.empty();
  const bool stopping = cfg.early_stopping && has_val;
  double best_val = std::numeric_limits<double>::infinity();
  Parameters best = m.params;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    GradResult g;
    try {
      g = grad(m, grad_queries, obj.loss, dropout_rng);
    } catch (const NumericError& e) {
      throw DivergenceError(epoch, e.what());
    }
    double ld = 0.0;
    for (std::size_t n = 0; n < obj.n_data; ++n) {
      ld += (g.outputs[n] - set.train_targets[n]) * (g.outputs[n] - set.train_targets[n]);
    }
    ld /= static_cast<double>(obj.n_data);
    const double lp = lambda == 0.0
                          ? obj.physics_value(predict(m, phys_points))
                          : obj.physics_value(std::span<const double>(g.outputs).subspan(obj.n_data));
    const double total = (1.0 - lambda) * ld + lambda * lp;
    if (!std::isfinite(total)) throw DivergenceError(epoch, "non-finite loss");
    rep.data_loss.push_back(ld);
    rep.physics_loss.push_back(lp);
    rep.total_loss.push_back(total);

    adam_step(m, g.grads, adam, m.spec.learning_rate);
    if (!m.params.all_finite()) throw DivergenceError(epoch, "non-finite parameters after update");
    rep.stop_epoch = epoch;

    if (has_val) {
      const double v = data_loss(m, set.val_points, set.val_targets);
      if (!std::isfinite(v)) throw DivergenceError(epoch, "non-finite validation loss");
      rep.val_data_loss.push_back(v);
      if (v < best_val - cfg.tolerance || epoch == 1) {
        best_val = v;
        best = m.params;
        rep.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience && stopping) {
        rep.early_stopped = true;
        break;
      }
    }
  }

  if (stopping) {
    m.params = best;
  } else {
    rep.best_epoch = rep.stop_epoch;
  }
  result.model.net = std::move(m);
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

TrainResult train(const MlpModel& m0, const Grid& frame, const ObservationSet& train_obs,
                  const ObservationSet& val_obs, const LossConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const TrainingSet set = make_training_set(frame, train_obs, val_obs);
  return train(m0, set, LaplacianPrior{laplacian_targets(set, cfg.mls_neighbors)}, cfg, seed);
}

TrainResult train_reveal(const Grid& frame, const ObservationSet& train_obs, const ObservationSet& val_obs,
                         const MlpSpec& spec, const LossConfig& cfg, std::uint64_t seed) {
  return train(init(spec, derive_seed(seed, stream::init)), frame, train_obs, val_obs, cfg, seed);
}

RemMap predict_rem(const RemModel& m, const Grid& grid) {
  const std::vector<Point> centers = grid.cell_centers();
  RemMap map{grid, m.predict(centers), std::nullopt};
  map.validate();
  return map;
}

nlohmann::json to_json(const LossConfig& cfg) {
  return {{"lambda", cfg.lambda},
          {"stencil_step", cfg.stencil_step},
          {"mls_neighbors", cfg.mls_neighbors},
          {"epochs", cfg.epochs},
          {"early_stopping", cfg.early_stopping},
          {"patience", cfg.patience},
          {"tolerance", cfg.tolerance}};
}

LossConfig loss_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("loss config must be an object");
  LossConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "lambda") cfg.lambda = value.get<double>();
      else if (key == "stencil_step") cfg.stencil_step = value.get<double>();
      else if (key == "mls_neighbors") cfg.mls_neighbors = value.get<std::size_t>();
      else if (key == "epochs") cfg.epochs = value.get<std::size_t>();
      else if (key == "early_stopping") cfg.early_stopping = value.get<bool>();
      else if (key == "patience") cfg.patience = value.get<std::size_t>();
      else if (key == "tolerance") cfg.tolerance = value.get<double>();
      else throw ConfigError("unknown training key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad training config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace reveal
