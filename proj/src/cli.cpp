#include "reveal/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>

#include "reveal/baselines.hpp"
#include "reveal/error.hpp"
#include "reveal/experiment.hpp"
#include "reveal/metrics.hpp"
#include "reveal/physics.hpp"
#include "reveal/rem_map.hpp"
#include "reveal/sampling.hpp"

namespace reveal::cli {

using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("sha256 unavailable");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int k = 0; k < len; ++k) hex += fmt::format("{:02x}", md[k]);
  return hex;
}

Point LocalProjection::project(double lat_deg, double lon_deg) const {
  constexpr double rad = std::numbers::pi / 180.0;
  return {kEarthRadiusM * std::cos(lat0_deg * rad) * (lon_deg - lon0_deg) * rad,
          kEarthRadiusM * (lat_deg - lat0_deg) * rad};
}

GeoIngest ingest_geo_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool with_channel = line == "lat,lon,rssi_dbm,channel";
  if (!with_channel && line != "lat,lon,rssi_dbm") {
    throw IoError(path.string() + ":1: expected header lat,lon,rssi_dbm[,channel]");
  }

  struct Row {
    double lat, lon, rssi;
  };
  std::vector<Row> rows;
  std::string channel = "C0";
  std::set<std::pair<double, double>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1) {
      f.push_back(line.substr(start, pos - start));
    }
    f.push_back(line.substr(start));
    Row r{};
    try {
      if (f.size() != (with_channel ? 4u : 3u)) throw std::invalid_argument("fields");
      std::size_t used = 0;
      r.lat = std::stod(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument("lat");
      r.lon = std::stod(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("lon");
      r.rssi = std::stod(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("rssi");
    } catch (const std::exception&) {
      throw IoError(fmt::format("{}:{}: malformed row", path.string(), line_no));
    }
    if (!(std::abs(r.lat) <= 90.0) || !(std::abs(r.lon) <= 180.0) || !std::isfinite(r.rssi)) {
      throw IoError(fmt::format("{}:{}: coordinates outside WGS84 range", path.string(), line_no));
    }
    if (with_channel) {
      if (rows.empty()) channel = f[3];
      else if (f[3] != channel) throw IoError(fmt::format("{}:{}: mixed channels", path.string(), line_no));
    }
    if (!seen.emplace(r.lat, r.lon).second) {
      throw IoError(fmt::format("{}:{}: duplicate coordinates", path.string(), line_no));
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw IoError(path.string() + ": no observations");

  GeoIngest out;
  for (const auto& r : rows) {
    out.projection.lat0_deg += r.lat;
    out.projection.lon0_deg += r.lon;
  }
  out.projection.lat0_deg /= static_cast<double>(rows.size());
  out.projection.lon0_deg /= static_cast<double>(rows.size());
  out.observations.channel = channel;
  for (const auto& r : rows) {
    out.observations.points.push_back(out.projection.project(r.lat, r.lon));
    out.observations.rssi_dbm.push_back(r.rssi);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Inputs and outputs are recorded with their hashes next to the outputs.
class Manifest {
 public:
  Manifest(std::string command, std::optional<std::uint64_t> seed) : command_(std::move(command)), seed_(seed) {}

  void input(const std::filesystem::path& p) { inputs_.push_back(p); }
  void output(const std::filesystem::path& p) { outputs_.push_back(p); }
  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write(const std::filesystem::path& path) const {
    json j = {{"command", command_},
              {"version", kToolVersion},
              {"seed", seed_ ? json(*seed_) : json(nullptr)},
              {"inputs", files(inputs_)},
              {"outputs", files(outputs_)}};
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
  }

 private:
  static json files(const std::vector<std::filesystem::path>& ps) {
    json a = json::array();
    for (const auto& p : ps) a.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
    return a;
  }

  std::string command_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  json extra_ = json::object();
};

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  return output.string() + ".manifest.json";
}

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

// Config file (optional) plus dotted `key=value` overrides, strictly validated.
struct ConfigSource {
  std::string path;
  std::vector<std::string> overrides;

  json raw() const {
    json j = json::object();
    if (!path.empty()) {
      std::ifstream in(path);
      if (!in) throw IoError("cannot read " + path);
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("malformed config " + path + ": " + e.what());
      }
    }
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: " + o);
      json* node = &j;
      std::string key = o.substr(0, eq);
      for (std::size_t dot; (dot = key.find('.')) != std::string::npos; key = key.substr(dot + 1)) {
        node = &(*node)[key.substr(0, dot)];
        if (!node->is_object() && !node->is_null()) throw ConfigError("override path is not an object: " + o);
      }
      (*node)[key] = parse_override_value(o.substr(eq + 1));
    }
    return j;
  }

  ExperimentConfig load() const { return experiment_config_from_json(raw()); }
};

void add_config_options(CLI::App* cmd, ConfigSource& src) {
  cmd->add_option("--config", src.path, "Experiment config JSON");
  cmd->add_option("--set", src.overrides, "Override a config key, e.g. --set training.lambda=0.5");
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string text = to_json(c).dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  for (unsigned int k = 0; k < len; ++k) hex += fmt::format("{:02x}", md[k]);
  return hex;
}

std::vector<Point> cell_candidates(const Grid& g, const std::vector<std::string>& exclude_files) {
  std::set<std::pair<double, double>> excluded;
  for (const auto& f : exclude_files) {
    for (const auto& p : read_observations(f).points) excluded.insert({p.x, p.y});
  }
  std::vector<Point> out;
  for (const auto& c : g.cell_centers()) {
    if (excluded.count({c.x, c.y}) == 0) out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  ConfigSource cfg;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

int cmd_generate(const GenerateArgs& a) {
  const ExperimentConfig c = a.cfg.load();
  const std::uint64_t seed = a.seed.value_or(c.seeds.front());
  const std::filesystem::path dir = a.out_dir.empty() ? c.output_dir : std::filesystem::path(a.out_dir);
  std::filesystem::create_directories(dir);
  const Scene scene = make_scene(c, seed);
  const auto js = dir / "scene.json";
  const auto csv = dir / "scene_truth.csv";
  write_scene(scene, js, csv);
  Manifest m("generate", seed);
  m.output(js);
  m.output(csv);
  m.set("config_sha256", config_hash(c));
  m.write(dir / "generate.manifest.json");
  std::cout << "seed " << seed << '\n';
  return 0;
}

struct SampleArgs {
  std::string scene;
  std::size_t n = 0;
  std::string method = "lpm";
  std::uint64_t seed = 1;
  double noise_db = 0.0;
  std::string channel = "C0";
  std::vector<std::string> exclude;
  std::string out;
};

int cmd_sample(const SampleArgs& a) {
  if (a.method != "lpm" && a.method != "random") throw ConfigError("--method must be lpm or random");
  if (!(a.noise_db >= 0.0)) throw ConfigError("--noise must be non-negative");
  const Scene scene = read_scene(a.scene);
  const std::vector<Point> candidates = cell_candidates(scene.grid, a.exclude);
  if (a.n == 0 || a.n > candidates.size()) {
    throw ConfigError(fmt::format("--n must lie in [1, {}]", candidates.size()));
  }
  std::vector<Point> chosen;
  for (std::size_t k : select_cells(candidates, a.n, a.method, derive_seed(a.seed, stream::sampling))) {
    chosen.push_back(candidates[k]);
  }
  const ObservationSet obs = observe(scene, chosen, a.noise_db, derive_seed(a.seed, stream::noise), a.channel);
  ensure_parent(a.out);
  write_observations(obs, a.out);
  Manifest m("sample", a.seed);
  m.input(a.scene);
  for (const auto& f : a.exclude) m.input(f);
  m.output(a.out);
  m.set("method", a.method);
  m.set("n", a.n);
  m.set("noise_db", a.noise_db);
  m.write(manifest_path(a.out));
  return 0;
}

struct TrainArgs {
  ConfigSource cfg;
  std::string train;
  std::string val;
  std::string scene;
  std::string method = "reveal";
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::string out;
  std::string report;
};

int cmd_train(const TrainArgs& a) {
  ExperimentConfig c = a.cfg.load();
  const std::vector<std::string> nets{"reveal", "fcnn", "pinn3gpp", "pinnitu"};
  if (std::find(nets.begin(), nets.end(), a.method) == nets.end()) {
    throw ConfigError("--method must be one of reveal, fcnn, pinn3gpp, pinnitu");
  }
  if (a.lambda) c.training.lambda = *a.lambda;
  if (a.epochs) c.training.epochs = *a.epochs;
  c.training.validate();
  const std::uint64_t seed = a.seed.value_or(c.seeds.front());

  Grid frame = c.grid;
  Transmitter tx = c.tx;
  if (!a.scene.empty()) {
    const Scene scene = read_scene(a.scene);
    frame = scene.grid;
    tx = scene.tx;
  }
  const ObservationSet train_obs = read_observations(a.train);
  const ObservationSet val_obs = a.val.empty() ? ObservationSet{} : read_observations(a.val);

  TrainResult r = a.method == "reveal" ? train_reveal(frame, train_obs, val_obs, c.model, c.training, seed)
                  : a.method == "fcnn" ? train_fcnn(frame, train_obs, val_obs, c.model, c.training, seed)
                                       : train_pinn_statmodel(frame, train_obs, val_obs,
                                                              a.method == "pinn3gpp" ? StatModel::gpp_38901
                                                                                     : StatModel::itu_imt2020,
                                                              c.statmodel, tx, c.model, c.training, seed);
  ensure_parent(a.out);
  write_rem_model(a.out, r.model, seed,
                  {{"method", a.method},
                   {"lambda", r.report.lambda},
                   {"config_sha256", config_hash(c)},
                   {"stop_epoch", r.report.stop_epoch},
                   {"best_epoch", r.report.best_epoch},
                   {"early_stopped", r.report.early_stopped}});
  const std::filesystem::path report =
      a.report.empty() ? std::filesystem::path(a.out).replace_extension(".report.csv") : std::filesystem::path(a.report);
  ensure_parent(report);
  write_train_report_csv(r.report, report);

  Manifest m("train", seed);
  m.input(a.train);
  if (!a.val.empty()) m.input(a.val);
  if (!a.scene.empty()) m.input(a.scene);
  m.output(a.out);
  m.output(report);
  m.set("method", a.method);
  m.set("config_sha256", config_hash(c));
  m.write(manifest_path(a.out));
  std::cout << fmt::format("{}: {} epochs, best {}, final L_total {}\n", a.method, r.report.stop_epoch,
                           r.report.best_epoch, r.report.total_loss.back());
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string scene;
  std::string out_csv;
  std::string out_pgm;
  std::optional<double> pgm_min;
  std::optional<double> pgm_max;
};

int cmd_predict(const PredictArgs& a) {
  const StoredRemModel stored = read_rem_model(a.model);
  std::optional<Scene> scene;
  if (!a.scene.empty()) scene = read_scene(a.scene);
  RemMap map = predict_rem(stored.model, scene ? scene->grid : stored.model.frame);
  if (scene) map.attach_truth(*scene);
  ensure_parent(a.out_csv);
  write_rem_csv(map, a.out_csv);
  Manifest m("predict", stored.seed);
  m.input(a.model);
  if (scene) m.input(a.scene);
  m.output(a.out_csv);
  if (!a.out_pgm.empty()) {
    ensure_parent(a.out_pgm);
    write_rem_pgm(map, a.out_pgm, a.pgm_min, a.pgm_max);
    m.output(a.out_pgm);
  }
  m.write(manifest_path(a.out_csv));
  return 0;
}

struct EvaluateArgs {
  std::string rem;
  std::string scene;
  std::string observations;
  std::string out;
  std::string csv;
  std::string label = "rem";
  bool sweep_lambda = false;
  ConfigSource cfg;
  std::vector<std::uint64_t> seeds;
  bool timing = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  if (a.out.empty()) throw ConfigError("--out is required");
  ensure_parent(a.out);
  if (a.sweep_lambda) {
    ExperimentConfig c = a.cfg.load();
    if (!a.seeds.empty()) c.seeds = a.seeds;
    const auto runs = run_lambda_sweep(c);
    write_runs_csv(a.out, runs, a.timing);
    const std::filesystem::path summary = std::filesystem::path(a.out).replace_extension(".summary.csv");
    write_summary_csv(summary, runs, a.timing);
    Manifest m("evaluate", c.seeds.front());
    m.output(a.out);
    m.output(summary);
    m.set("mode", "lambda_sweep");
    m.set("seeds", c.seeds);
    m.set("config_sha256", config_hash(c));
    m.write(manifest_path(a.out));
    return 0;
  }

  if (a.rem.empty() || a.scene.empty()) throw ConfigError("--rem and --scene are required");
  const Scene scene = read_scene(a.scene);
  const RemMap map = read_rem_csv(a.rem, scene.grid);
  std::vector<double> pred;
  std::vector<double> truth;
  if (a.observations.empty()) {
    pred = map.values;
    truth = scene.truth;
  } else {
    const ObservationSet obs = read_observations(a.observations);
    for (std::size_t k = 0; k < obs.size(); ++k) {
      if (!scene.grid.contains(obs.points[k])) throw ConfigError(fmt::format("observation {} lies outside the grid", k));
      pred.push_back(map.interpolate(obs.points[k]));
      truth.push_back(obs.rssi_dbm[k]);
    }
  }
  const EvalReport r = evaluate(pred, truth);
  {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw IoError("cannot write " + a.out);
    out << to_json(r).dump(2) << '\n';
  }
  Manifest m("evaluate", std::nullopt);
  m.input(a.rem);
  m.input(a.scene);
  if (!a.observations.empty()) m.input(a.observations);
  m.output(a.out);
  if (!a.csv.empty()) {
    ensure_parent(a.csv);
    std::ofstream out(a.csv, std::ios::binary);
    if (!out) throw IoError("cannot write " + a.csv);
    out << eval_report_csv(r, a.label);
    m.output(a.csv);
  }
  m.write(manifest_path(a.out));
  std::cout << fmt::format("rmse {:.4f} dB, mae {:.4f} dB, r2 {:.4f}, n {}\n", r.rmse, r.mae, r.r_squared, r.n_points);
  return 0;
}

struct IngestArgs {
  std::string in;
  std::string out;
};

int cmd_ingest(const IngestArgs& a) {
  const GeoIngest g = ingest_geo_csv(a.in);
  ensure_parent(a.out);
  write_observations(g.observations, a.out);
  Manifest m("ingest", std::nullopt);
  m.input(a.in);
  m.output(a.out);
  m.set("projection", {{"kind", "equirectangular"},
                       {"lat0_deg", g.projection.lat0_deg},
                       {"lon0_deg", g.projection.lon0_deg},
                       {"earth_radius_m", kEarthRadiusM}});
  m.write(manifest_path(a.out));
  return 0;
}

struct BenchArgs {
  ConfigSource cfg;
  std::string out_dir;
  bool timing = false;
};

int cmd_bench(const BenchArgs& a) {
  ExperimentConfig c = a.cfg.load();
  if (!a.out_dir.empty()) c.output_dir = a.out_dir;
  run_bench(c, a.timing);
  Manifest m("bench", c.seeds.front());
  for (const auto& name : {"table.csv", "table_runs.csv", "sample_size.csv", "sample_size_runs.csv", "lambda_sweep.csv",
                           "lambda_sweep_runs.csv", "rem.csv", "rem.pgm", "abs_error.pgm", "ecdf.csv"}) {
    m.output(c.output_dir / name);
  }
  m.set("seeds", c.seeds);
  m.set("config", to_json(c));
  m.set("config_sha256", config_hash(c));
  m.write(c.output_dir / "bench.manifest.json");
  std::ifstream table(c.output_dir / "table.csv");
  std::cout << table.rdbuf();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Radio environment map reconstruction with a Laplacian-regularized network", "reveal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Synthesize a ground-truth scene");
  add_config_options(g, gen.cfg);
  g->add_option("--seed", gen.seed, "Scene seed (default: first config seed)");
  g->add_option("--out", gen.out_dir, "Output directory (default: config output_dir)");

  SampleArgs smp;
  auto* s = app.add_subcommand("sample", "Choose sensor cells and read observations");
  s->add_option("--scene", smp.scene, "Scene JSON")->required();
  s->add_option("--n", smp.n, "Number of sensors")->required();
  s->add_option("--method", smp.method, "lpm or random");
  s->add_option("--seed", smp.seed, "Sampling seed");
  s->add_option("--noise", smp.noise_db, "Observation noise sigma, dB");
  s->add_option("--channel", smp.channel, "Channel tag");
  s->add_option("--exclude", smp.exclude, "Observation CSVs whose cells are not candidates");
  s->add_option("--out", smp.out, "Observations CSV")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a network on observations");
  add_config_options(t, tr.cfg);
  t->add_option("--train", tr.train, "Training observations CSV")->required();
  t->add_option("--val", tr.val, "Validation observations CSV for early stopping");
  t->add_option("--scene", tr.scene, "Scene JSON supplying the grid and transmitter");
  t->add_option("--method", tr.method, "reveal, fcnn, pinn3gpp or pinnitu");
  t->add_option("--seed", tr.seed, "Training seed (default: first config seed)");
  t->add_option("--lambda", tr.lambda, "Physics weight");
  t->add_option("--epochs", tr.epochs, "Epoch budget");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--report", tr.report, "Loss trace CSV (default: <out>.report.csv)");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Predict a REM from a checkpoint");
  p->add_option("--model", pr.model, "Checkpoint")->required();
  p->add_option("--scene", pr.scene, "Scene JSON; uses its grid and adds the error layer");
  p->add_option("--out-csv", pr.out_csv, "REM CSV")->required();
  p->add_option("--out-pgm", pr.out_pgm, "REM image (plain PGM)");
  p->add_option("--pgm-min", pr.pgm_min, "dBm mapped to black");
  p->add_option("--pgm-max", pr.pgm_max, "dBm mapped to white");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a REM, or run the lambda sweep");
  e->add_option("--rem", ev.rem, "REM CSV");
  e->add_option("--scene", ev.scene, "Scene JSON with the truth layer");
  e->add_option("--observations", ev.observations, "Score against these observations instead of the truth layer");
  e->add_option("--out", ev.out, "Report JSON, or sweep CSV with --sweep-lambda")->required();
  e->add_option("--csv", ev.csv, "Also write a one-row CSV");
  e->add_option("--label", ev.label, "Row label for --csv");
  e->add_flag("--sweep-lambda", ev.sweep_lambda, "Train ReVeal at every configured lambda");
  add_config_options(e, ev.cfg);
  e->add_option("--seed", ev.seeds, "Seeds for the sweep (default: config seeds)");
  e->add_flag("--timing", ev.timing, "Include wall times in the sweep CSV");

  IngestArgs in;
  auto* i = app.add_subcommand("ingest", "Project lat/lon observations to a metric frame");
  i->add_option("--in", in.in, "CSV with lat,lon,rssi_dbm[,channel]")->required();
  i->add_option("--out", in.out, "Observations CSV")->required();

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Method comparison, sample-size and lambda sweeps");
  b->alias("reveal-bench");
  add_config_options(b, be.cfg);
  b->add_option("--out", be.out_dir, "Output directory (default: config output_dir)");
  b->add_flag("--timing", be.timing, "Include wall times in the tables");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForVersion& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_sample(smp);
    if (*t) return cmd_train(tr);
    if (*p) return cmd_predict(pr);
    if (*e) return cmd_evaluate(ev);
    if (*i) return cmd_ingest(in);
    if (*b) return cmd_bench(be);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 2;
  } catch (const DivergenceError& err) {
    std::cerr << "divergence: " << err.what() << '\n';
    return 3;
  } catch (const NumericError& err) {
    std::cerr << "numeric error: " << err.what() << '\n';
    return 3;
  } catch (const IoError& err) {
    std::cerr << "i/o error: " << err.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "i/o error: " << err.what() << '\n';
    return 4;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 2;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args);
}

}  // namespace reveal::cli
