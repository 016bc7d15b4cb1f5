#include "reveal/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "reveal/error.hpp"
#include "reveal/rng.hpp"
#include "reveal/sampling.hpp"

namespace reveal {

using nlohmann::json;

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"reveal", "fcnn",     "kriging", "3gpp",
                                          "itu",    "pinn3gpp", "pinnitu", "logdist"};
  return m;
}

void ExperimentConfig::validate() const {
  try {
    tx.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!grid.contains(tx.location)) throw ConfigError("transmitter must lie inside the grid");
  if (!(shadow.sigma_db >= 0.0)) throw ConfigError("shadow sigma must be non-negative");
  if (!(shadow.correlation_length_m > 0.0)) throw ConfigError("correlation length must be positive");
  if (!(noise_sigma_db >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (sampling != "lpm" && sampling != "random") throw ConfigError("sampling must be lpm or random");
  if (train_size == 0 || test_size == 0) throw ConfigError("train and test sizes must be positive");
  const std::size_t biggest = std::max(train_size, sample_sizes.empty() ? 0 : *std::max_element(sample_sizes.begin(), sample_sizes.end()));
  if (biggest + val_size + test_size > grid.cell_count()) throw ConfigError("grid has too few cells for the splits");
  for (auto n : sample_sizes) {
    if (n == 0) throw ConfigError("sample sizes must be positive");
  }
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambdas must lie in [0, 1]");
  }
  if (!(sample_sweep_lambda >= 0.0 && sample_sweep_lambda <= 1.0)) throw ConfigError("sample_sweep_lambda out of [0, 1]");
  if (!(map_lambda >= 0.0 && map_lambda <= 1.0)) throw ConfigError("map_lambda out of [0, 1]");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  for (const auto& m : methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ConfigError("unknown method: " + m);
    }
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  training.validate();
  statmodel.validate();
}

namespace {

template <class F>
void each_key(const json& j, const std::string& where, F&& f) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!f(key, value)) throw ConfigError("unknown key: " + (where.empty() ? key : where + "." + key));
  }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    double x_min = c.grid.x_min();
    double x_max = c.grid.x_max();
    double y_min = c.grid.y_min();
    double y_max = c.grid.y_max();
    std::size_t rows = c.grid.rows();
    std::size_t cols = c.grid.cols();
    each_key(j, "", [&](const std::string& k, const json& v) {
      if (k == "grid") {
        each_key(v, "grid", [&](const std::string& g, const json& gv) {
          if (g == "x_min") x_min = gv.get<double>();
          else if (g == "x_max") x_max = gv.get<double>();
          else if (g == "y_min") y_min = gv.get<double>();
          else if (g == "y_max") y_max = gv.get<double>();
          else if (g == "rows") rows = gv.get<std::size_t>();
          else if (g == "cols") cols = gv.get<std::size_t>();
          else return false;
          return true;
        });
      } else if (k == "transmitter") {
        each_key(v, "transmitter", [&](const std::string& t, const json& tv) {
          if (t == "x_m") c.tx.location.x = tv.get<double>();
          else if (t == "y_m") c.tx.location.y = tv.get<double>();
          else if (t == "tx_power_dbm") c.tx.tx_power_dbm = tv.get<double>();
          else if (t == "path_loss_exponent") c.tx.path_loss_exponent = tv.get<double>();
          else if (t == "reference_distance_m") c.tx.reference_distance_m = tv.get<double>();
          else return false;
          return true;
        });
      } else if (k == "shadow") {
        each_key(v, "shadow", [&](const std::string& s, const json& sv) {
          if (s == "sigma_db") c.shadow.sigma_db = sv.get<double>();
          else if (s == "correlation_length_m") c.shadow.correlation_length_m = sv.get<double>();
          else if (s == "method") {
            const auto m = sv.get<std::string>();
            if (m != "circulant" && m != "cholesky") throw ConfigError("shadow.method must be circulant or cholesky");
            c.shadow.method = m == "circulant" ? ShadowMethod::circulant : ShadowMethod::cholesky;
          } else return false;
          return true;
        });
      } else if (k == "model") {
        each_key(v, "model", [&](const std::string& m, const json& mv) {
          if (m == "input_dim") c.model.input_dim = mv.get<std::size_t>();
          else if (m == "hidden_layers") c.model.hidden_layers = mv.get<std::size_t>();
          else if (m == "width") c.model.width = mv.get<std::size_t>();
          else if (m == "activation") {
            if (mv.get<std::string>() != "relu") throw ConfigError("model.activation must be relu");
          } else if (m == "dropout_rate") c.model.dropout_rate = mv.get<double>();
          else if (m == "output_dim") c.model.output_dim = mv.get<std::size_t>();
          else if (m == "learning_rate") c.model.learning_rate = mv.get<double>();
          else return false;
          return true;
        });
      } else if (k == "training") {
        json merged = to_json(c.training);
        each_key(v, "training", [&](const std::string& t, const json& tv) {
          if (!merged.contains(t)) return false;
          merged[t] = tv;
          return true;
        });
        c.training = loss_config_from_json(merged);
      } else if (k == "statmodel") {
        each_key(v, "statmodel", [&](const std::string& s, const json& sv) {
          if (s == "carrier_ghz") c.statmodel.carrier_ghz = sv.get<double>();
          else if (s == "h_bs_m") c.statmodel.h_bs_m = sv.get<double>();
          else if (s == "h_ut_m") c.statmodel.h_ut_m = sv.get<double>();
          else if (s == "building_height_m") c.statmodel.building_height_m = sv.get<double>();
          else if (s == "street_width_m") c.statmodel.street_width_m = sv.get<double>();
          else if (s == "scenario") c.statmodel.scenario = sv.get<std::string>();
          else return false;
          return true;
        });
      } else if (k == "min_distance_m") c.min_distance_m = v.get<double>();
      else if (k == "noise_sigma_db") c.noise_sigma_db = v.get<double>();
      else if (k == "sampling") c.sampling = v.get<std::string>();
      else if (k == "train_size") c.train_size = v.get<std::size_t>();
      else if (k == "val_size") c.val_size = v.get<std::size_t>();
      else if (k == "test_size") c.test_size = v.get<std::size_t>();
      else if (k == "sample_sizes") c.sample_sizes = v.get<std::vector<std::size_t>>();
      else if (k == "sample_sweep_lambda") c.sample_sweep_lambda = v.get<double>();
      else if (k == "lambdas") c.lambdas = v.get<std::vector<double>>();
      else if (k == "map_lambda") c.map_lambda = v.get<double>();
      else if (k == "seeds") c.seeds = v.get<std::vector<std::uint64_t>>();
      else if (k == "methods") c.methods = v.get<std::vector<std::string>>();
      else if (k == "output_dir") c.output_dir = v.get<std::string>();
      else return false;
      return true;
    });
    try {
      c.grid = Grid(x_min, x_max, y_min, y_max, rows, cols);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {{"grid", to_json(c.grid)},
          {"transmitter", to_json(c.tx)},
          {"shadow",
           {{"sigma_db", c.shadow.sigma_db},
            {"correlation_length_m", c.shadow.correlation_length_m},
            {"method", c.shadow.method == ShadowMethod::circulant ? "circulant" : "cholesky"}}},
          {"min_distance_m", c.min_distance_m},
          {"noise_sigma_db", c.noise_sigma_db},
          {"sampling", c.sampling},
          {"train_size", c.train_size},
          {"val_size", c.val_size},
          {"test_size", c.test_size},
          {"sample_sizes", c.sample_sizes},
          {"sample_sweep_lambda", c.sample_sweep_lambda},
          {"lambdas", c.lambdas},
          {"map_lambda", c.map_lambda},
          {"seeds", c.seeds},
          {"methods", c.methods},
          {"model", to_json(c.model)},
          {"training", to_json(c.training)},
          {"statmodel",
           {{"carrier_ghz", c.statmodel.carrier_ghz},
            {"h_bs_m", c.statmodel.h_bs_m},
            {"h_ut_m", c.statmodel.h_ut_m},
            {"building_height_m", c.statmodel.building_height_m},
            {"street_width_m", c.statmodel.street_width_m},
            {"scenario", c.statmodel.scenario}}},
          {"output_dir", c.output_dir.string()}};
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

// ---------------------------------------------------------------------------

Scene make_scene(const ExperimentConfig& c, std::uint64_t seed) {
  const ShadowField shadow = gen_shadow_field(c.grid, c.shadow.sigma_db, c.shadow.correlation_length_m,
                                              derive_seed(seed, stream::shadow), c.shadow.method);
  return build_scene(c.grid, c.tx, shadow, c.min_distance_m);
}

std::vector<std::size_t> select_cells(const std::vector<Point>& candidates, std::size_t n, const std::string& method,
                                      std::uint64_t seed) {
  if (method == "lpm") return lpm_select(uniform_probs(candidates, n), seed);
  if (method == "random") return random_select(candidates.size(), n, seed);
  throw ConfigError("unknown sampling method: " + method + " (expected lpm or random)");
}

Scenario make_scenario(const ExperimentConfig& c, std::uint64_t seed, std::size_t train_size) {
  return make_scenario(c, make_scene(c, seed), seed, train_size);
}

Scenario make_scenario(const ExperimentConfig& c, const Scene& scene, std::uint64_t seed, std::size_t train_size) {
  const std::vector<Point> centers = scene.grid.cell_centers();
  const std::size_t cells = centers.size();
  if (train_size + c.val_size + c.test_size > cells) throw ConfigError("grid has too few cells for the splits");

  Scenario s{scene, {}, {}, {}, {}};
  std::vector<bool> used(cells, false);
  const std::uint64_t holdout = derive_seed(seed, stream::holdout);
  for (std::size_t k : random_select(cells, c.test_size, holdout)) {
    used[k] = true;
    s.test_points.push_back(centers[k]);
    s.test_truth.push_back(scene.truth[k]);
  }

  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < cells; ++k) {
    if (!used[k]) rest.push_back(k);
  }
  std::vector<Point> val_points;
  if (c.val_size > 0) {
    for (std::size_t r : random_select(rest.size(), c.val_size, derive_seed(holdout, 1))) {
      used[rest[r]] = true;
      val_points.push_back(centers[rest[r]]);
    }
  }

  rest.clear();
  std::vector<Point> candidates;
  for (std::size_t k = 0; k < cells; ++k) {
    if (!used[k]) {
      rest.push_back(k);
      candidates.push_back(centers[k]);
    }
  }
  std::vector<Point> train_points;
  for (std::size_t r : select_cells(candidates, train_size, c.sampling, derive_seed(seed, stream::sampling))) {
    train_points.push_back(candidates[r]);
  }

  const std::uint64_t noise = derive_seed(seed, stream::noise);
  s.train = observe(scene, train_points, c.noise_sigma_db, noise);
  if (!val_points.empty()) s.val = observe(scene, val_points, c.noise_sigma_db, derive_seed(noise, 1));
  return s;
}

// ---------------------------------------------------------------------------

MethodRun run_method(const ExperimentConfig& c, const Scenario& s, const std::string& method, std::uint64_t seed,
                     std::optional<double> lambda) {
  MethodRun run;
  run.method = method;
  run.seed = seed;
  run.train_size = s.train.size();
  LossConfig cfg = c.training;
  if (lambda) cfg.lambda = *lambda;
  run.lambda = cfg.lambda;

  const auto t0 = std::chrono::steady_clock::now();
  const Grid& frame = s.scene.grid;
  if (method == "reveal" || method == "fcnn" || method == "pinn3gpp" || method == "pinnitu") {
    TrainResult r = method == "reveal" ? train_reveal(frame, s.train, s.val, c.model, cfg, seed)
                    : method == "fcnn" ? train_fcnn(frame, s.train, s.val, c.model, cfg, seed)
                                       : train_pinn_statmodel(frame, s.train, s.val,
                                                              method == "pinn3gpp" ? StatModel::gpp_38901
                                                                                   : StatModel::itu_imt2020,
                                                              c.statmodel, s.scene.tx, c.model, cfg, seed);
    if (method == "fcnn") run.lambda = 0.0;
    run.test_predictions = r.model.predict(s.test_points);
    run.train = std::move(r.report);
  } else if (method == "kriging") {
    const OrdinaryKriging ok(s.train, fit_variogram(s.train));
    run.test_predictions = ok.predict_mean(s.test_points);
    run.lambda = 0.0;
  } else if (method == "3gpp" || method == "itu") {
    run.test_predictions = stat_model_rssi(stat_model_from_string(method), c.statmodel, s.scene.tx, s.test_points);
    run.lambda = 0.0;
  } else if (method == "logdist") {
    const LogDistanceFit f = fit_log_distance(s.train, s.scene.tx.location, s.scene.tx.reference_distance_m);
    Transmitter fitted = s.scene.tx;
    fitted.tx_power_dbm = f.tx_power_dbm;
    fitted.path_loss_exponent = f.path_loss_exponent;
    for (const auto& p : s.test_points) {
      const double d = std::max(distance(p, fitted.location), s.scene.min_distance_m);
      run.test_predictions.push_back(log_distance_rssi(fitted, d));
    }
    run.lambda = 0.0;
  } else {
    throw ConfigError("unknown method: " + method);
  }
  run.test = evaluate(run.test_predictions, s.test_truth);
  run.test.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  return percentile(std::move(v), 0.5);
}

void write_runs_csv(const std::filesystem::path& path, const std::vector<MethodRun>& runs, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method,seed,lambda,train_size,rmse_db,mae_db,r_squared,n_points,stop_epoch" << (timing ? ",wall_time_s" : "")
      << '\n';
  for (const auto& r : runs) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}", r.method, r.seed, r.lambda, r.train_size, r.test.rmse, r.test.mae,
                       r.test.r_squared, r.test.n_points, r.train ? r.train->stop_epoch : 0);
    if (timing) out << fmt::format(",{}", r.test.wall_time_s.value_or(0.0));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<MethodRun>& runs, bool timing) {
  struct Group {
    std::string method;
    double lambda;
    std::size_t n;
    std::vector<double> rmse, mae, r2, time;
  };
  std::vector<Group> groups;
  for (const auto& r : runs) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.method == r.method && g.lambda == r.lambda && g.n == r.train_size;
    });
    if (it == groups.end()) {
      groups.push_back({r.method, r.lambda, r.train_size, {}, {}, {}, {}});
      it = groups.end() - 1;
    }
    it->rmse.push_back(r.test.rmse);
    it->mae.push_back(r.test.mae);
    it->r2.push_back(r.test.r_squared);
    it->time.push_back(r.test.wall_time_s.value_or(0.0));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method,lambda,train_size,seeds,median_rmse_db,median_mae_db,median_r_squared"
      << (timing ? ",median_wall_time_s" : "") << '\n';
  for (const auto& g : groups) {
    out << fmt::format("{},{},{},{},{},{},{}", g.method, g.lambda, g.n, g.rmse.size(), median(g.rmse), median(g.mae),
                       median(g.r2));
    if (timing) out << fmt::format(",{}", median(g.time));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

void write_ecdf_csv(const std::filesystem::path& path, const Ecdf& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << fmt::format("# p25={} p50={} p75={}\n", e.p25, e.p50, e.p75);
  out << "abs_err_db,cumulative\n";
  for (const auto& s : e.steps) out << fmt::format("{},{}\n", s.value, s.cumulative);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::vector<MethodRun> run_lambda_sweep(const ExperimentConfig& c) {
  c.validate();
  std::vector<MethodRun> runs;
  for (std::uint64_t seed : c.seeds) {
    const Scenario s = make_scenario(c, seed, c.train_size);
    for (double l : c.lambdas) runs.push_back(run_method(c, s, "reveal", seed, l));
  }
  return runs;
}

BenchSummary run_bench(const ExperimentConfig& c, bool timing) {
  c.validate();
  std::filesystem::create_directories(c.output_dir);
  BenchSummary out;

  for (std::uint64_t seed : c.seeds) {
    const Scene scene = make_scene(c, seed);
    const Scenario base = make_scenario(c, scene, seed, c.train_size);
    for (const auto& m : c.methods) {
      out.table.push_back(run_method(c, base, m, seed));
      const auto& r = out.table.back();
      if (seed == c.seeds.front() && r.train) {
        write_train_report_csv(*r.train, c.output_dir / fmt::format("loss_{}.csv", m));
      }
    }
    for (std::size_t n : c.sample_sizes) {
      const Scenario s = n == c.train_size ? base : make_scenario(c, scene, seed, n);
      out.sample_sweep.push_back(run_method(c, s, "reveal", seed, c.sample_sweep_lambda));
    }
    for (double l : c.lambdas) out.lambda_sweep.push_back(run_method(c, base, "reveal", seed, l));
  }

  write_runs_csv(c.output_dir / "table_runs.csv", out.table, timing);
  write_summary_csv(c.output_dir / "table.csv", out.table, timing);
  write_runs_csv(c.output_dir / "sample_size_runs.csv", out.sample_sweep, timing);
  write_summary_csv(c.output_dir / "sample_size.csv", out.sample_sweep, timing);
  write_runs_csv(c.output_dir / "lambda_sweep_runs.csv", out.lambda_sweep, timing);
  write_summary_csv(c.output_dir / "lambda_sweep.csv", out.lambda_sweep, timing);

  // Error map and ECDF for the first seed.
  const std::uint64_t seed = c.seeds.front();
  const Scenario s = make_scenario(c, seed, c.train_size);
  LossConfig cfg = c.training;
  cfg.lambda = c.map_lambda;
  const TrainResult r = train_reveal(s.scene.grid, s.train, s.val, c.model, cfg, seed);
  RemMap map = predict_rem(r.model, s.scene.grid);
  map.attach_truth(s.scene);
  write_rem_csv(map, c.output_dir / "rem.csv");
  write_rem_pgm(map, c.output_dir / "rem.pgm");
  RemMap err{map.grid, *map.abs_error, std::nullopt};
  write_rem_pgm(err, c.output_dir / "abs_error.pgm");
  write_ecdf_csv(c.output_dir / "ecdf.csv", ecdf(*map.abs_error));
  return out;
}

}  // namespace reveal
