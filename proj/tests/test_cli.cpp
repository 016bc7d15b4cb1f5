#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "reveal/cli.hpp"
#include "reveal/error.hpp"
#include "reveal/experiment.hpp"
#include "reveal/metrics.hpp"
#include "reveal/physics.hpp"
#include "reveal/rem_map.hpp"
#include "reveal/sampling.hpp"

using namespace reveal;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("reveal_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  }
  return out;
}

int run(std::vector<std::string> args) {
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  auto* old_err = std::cerr.rdbuf(sink.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(old);
  std::cerr.rdbuf(old_err);
  return code;
}

std::string capture(std::vector<std::string> args) {
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  cli::run(args);
  std::cout.rdbuf(old);
  return sink.str();
}

fs::path small_config(const fs::path& dir, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json j = {{"grid", {{"x_min", 0}, {"x_max", 800}, {"y_min", 0}, {"y_max", 800}, {"rows", 16}, {"cols", 16}}},
                      {"transmitter", {{"x_m", 410}, {"y_m", 390}}},
                      {"shadow", {{"correlation_length_m", 150}}},
                      {"train_size", 20},
                      {"val_size", 10},
                      {"test_size", 40},
                      {"sample_sizes", {12, 20}},
                      {"lambdas", {0.0, 0.9, 1.0}},
                      {"seeds", {1}},
                      {"model", {{"width", 16}, {"hidden_layers", 2}}},
                      {"training", {{"epochs", 40}}},
                      {"output_dir", (dir / "out").string()}};
  j.merge_patch(extra);
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string header_of(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

int system_exit(const std::string& cmd) {
  const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("sha256 of a file") {
  const auto dir = temp_dir("sha");
  std::ofstream(dir / "abc", std::ios::binary) << "abc";
  CHECK(cli::sha256_file(dir / "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS(cli::sha256_file(dir / "missing"), IoError);
}

TEST_CASE("generate is deterministic and writes a manifest") {
  const auto dir = temp_dir("generate");
  const auto cfg = small_config(dir);
  const std::vector<std::string> cmd{"generate", "--config", cfg.string(), "--seed", "7", "--out", (dir / "a").string()};
  CHECK(capture(cmd) == "seed 7\n");
  const auto first = snapshot(dir / "a");
  CHECK(run(cmd) == 0);
  CHECK(snapshot(dir / "a") == first);
  CHECK(first.count("scene.json") == 1);
  CHECK(first.count("scene_truth.csv") == 1);

  const auto man = nlohmann::json::parse(first.at("generate.manifest.json"));
  CHECK(man.at("command") == "generate");
  CHECK(man.at("seed") == 7);
  CHECK(man.at("version") == "1.0.0");
  CHECK(man.contains("config_sha256"));
  for (const auto& o : man.at("outputs")) CHECK(o.at("sha256") == cli::sha256_file(o.at("path").get<std::string>()));

  const Scene s = read_scene(dir / "a" / "scene.json");
  CHECK(s.grid.rows() == 16);
  CHECK(s.shadow.seed != 0);
}

TEST_CASE("generate without shadowing writes the analytic field") {
  const auto dir = temp_dir("generate0");
  const auto cfg = small_config(dir, {{"shadow", {{"sigma_db", 0.0}}}});
  REQUIRE(run({"generate", "--config", cfg.string(), "--out", (dir / "s").string()}) == 0);
  const Scene s = read_scene(dir / "s" / "scene.json");
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(s.truth_at(i, j) == path_loss_rssi(s.tx, s.grid.cell_center(i, j), s.grid.pitch()).rssi_dbm);
    }
  }
}

TEST_CASE("config overrides") {
  const auto dir = temp_dir("set");
  const auto cfg = small_config(dir);
  REQUIRE(run({"generate", "--config", cfg.string(), "--set", "grid.rows=8", "--set", "shadow.method=cholesky",
               "--out", (dir / "o").string()}) == 0);
  const Scene s = read_scene(dir / "o" / "scene.json");
  CHECK(s.grid.rows() == 8);
  CHECK(s.shadow.method == ShadowMethod::cholesky);
  CHECK(run({"generate", "--config", cfg.string(), "--set", "grid.depth=3", "--out", (dir / "p").string()}) == 2);
  CHECK(run({"generate", "--config", cfg.string(), "--set", "noequals", "--out", (dir / "p").string()}) == 2);
}

TEST_CASE("sample") {
  const auto dir = temp_dir("sample");
  const auto cfg = small_config(dir);
  REQUIRE(run({"generate", "--config", cfg.string(), "--out", dir.string()}) == 0);
  const auto scene = (dir / "scene.json").string();

  SUBCASE("format and determinism") {
    REQUIRE(run({"sample", "--scene", scene, "--n", "20", "--seed", "3", "--out", (dir / "a.csv").string()}) == 0);
    const auto first = slurp(dir / "a.csv");
    REQUIRE(run({"sample", "--scene", scene, "--n", "20", "--seed", "3", "--out", (dir / "a.csv").string()}) == 0);
    CHECK(slurp(dir / "a.csv") == first);
    CHECK(header_of(dir / "a.csv") == "x_m,y_m,rssi_dbm,channel");
    CHECK(read_observations(dir / "a.csv").size() == 20);
    CHECK(fs::exists(dir / "a.csv.manifest.json"));
  }
  SUBCASE("every candidate") {
    REQUIRE(run({"sample", "--scene", scene, "--n", "256", "--out", (dir / "all.csv").string()}) == 0);
    CHECK(read_observations(dir / "all.csv").size() == 256);
    CHECK(run({"sample", "--scene", scene, "--n", "257", "--out", (dir / "x.csv").string()}) == 2);
  }
  SUBCASE("exclusion keeps files disjoint") {
    REQUIRE(run({"sample", "--scene", scene, "--n", "30", "--seed", "1", "--out", (dir / "t.csv").string()}) == 0);
    REQUIRE(run({"sample", "--scene", scene, "--n", "30", "--seed", "2", "--method", "random", "--exclude",
                 (dir / "t.csv").string(), "--out", (dir / "v.csv").string()}) == 0);
    const auto t = read_observations(dir / "t.csv");
    const auto v = read_observations(dir / "v.csv");
    for (const auto& p : v.points) CHECK(std::find(t.points.begin(), t.points.end(), p) == t.points.end());
  }
  SUBCASE("lpm spreads more than random over seeds") {
    double lpm = 0.0;
    double srs = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
      REQUIRE(run({"sample", "--scene", scene, "--n", "20", "--seed", std::to_string(seed), "--out",
                   (dir / "l.csv").string()}) == 0);
      REQUIRE(run({"sample", "--scene", scene, "--n", "20", "--seed", std::to_string(seed), "--method", "random",
                   "--out", (dir / "r.csv").string()}) == 0);
      lpm += mean_nearest_neighbor_distance(read_observations(dir / "l.csv").points);
      srs += mean_nearest_neighbor_distance(read_observations(dir / "r.csv").points);
    }
    CHECK(lpm > srs);
  }
  SUBCASE("bad method") {
    CHECK(run({"sample", "--scene", scene, "--n", "5", "--method", "grid", "--out", (dir / "b.csv").string()}) == 2);
  }
}

TEST_CASE("train, predict and evaluate") {
  const auto dir = temp_dir("pipeline");
  const auto cfg = small_config(dir);
  const auto c = cfg.string();
  REQUIRE(run({"generate", "--config", c, "--out", dir.string()}) == 0);
  const auto scene = (dir / "scene.json").string();
  REQUIRE(run({"sample", "--scene", scene, "--n", "20", "--seed", "1", "--out", (dir / "train.csv").string()}) == 0);
  REQUIRE(run({"sample", "--scene", scene, "--n", "10", "--seed", "2", "--method", "random", "--exclude",
               (dir / "train.csv").string(), "--out", (dir / "val.csv").string()}) == 0);
  const auto train = (dir / "train.csv").string();
  const auto val = (dir / "val.csv").string();

  SUBCASE("fcnn is reveal with lambda zero") {
    REQUIRE(run({"train", "--config", c, "--train", train, "--val", val, "--scene", scene, "--method", "fcnn",
                 "--out", (dir / "f.ckpt").string()}) == 0);
    REQUIRE(run({"train", "--config", c, "--train", train, "--val", val, "--scene", scene, "--method", "reveal",
                 "--lambda", "0", "--out", (dir / "r.ckpt").string()}) == 0);
    const auto f = read_rem_model(dir / "f.ckpt");
    const auto r = read_rem_model(dir / "r.ckpt");
    CHECK(f.model.net.params.flatten() == r.model.net.params.flatten());
    CHECK(slurp(dir / "f.report.csv") == slurp(dir / "r.report.csv"));
    CHECK(f.metadata.at("method") == "fcnn");
    CHECK(f.metadata.contains("config_sha256"));
  }

  SUBCASE("checkpoint round trip through predict and evaluate") {
    const auto ck = (dir / "m.ckpt").string();
    REQUIRE(run({"train", "--config", c, "--train", train, "--val", val, "--scene", scene, "--out", ck}) == 0);
    CHECK(header_of(dir / "m.report.csv") == "epoch,L_d,L_p,L_total,val_L_d");
    const auto before = slurp(ck);
    REQUIRE(run({"train", "--config", c, "--train", train, "--val", val, "--scene", scene, "--out", ck}) == 0);
    CHECK(slurp(ck) == before);

    const auto csv = (dir / "rem.csv").string();
    const auto pgm = (dir / "rem.pgm").string();
    REQUIRE(run({"predict", "--model", ck, "--scene", scene, "--out-csv", csv, "--out-pgm", pgm}) == 0);
    const Scene s = read_scene(scene);
    const auto stored = read_rem_model(ck);
    const auto map = read_rem_csv(csv, s.grid);
    CHECK(map.values == predict_rem(stored.model, s.grid).values);
    CHECK(header_of(csv) == "i,j,x_m,y_m,rssi_dbm,abs_err_db");

    std::istringstream img(slurp(pgm));
    std::string magic, comment;
    std::size_t w = 0, h = 0, maxv = 0;
    img >> magic >> std::ws;
    std::getline(img, comment);
    img >> w >> h >> maxv;
    CHECK(magic == "P2");
    CHECK(comment.rfind("# rssi_dbm_min=", 0) == 0);
    CHECK(w == 16);
    CHECK(h == 16);
    std::vector<int> px(w * h);
    for (auto& v : px) img >> v;
    const auto k_pgm = static_cast<std::size_t>(std::max_element(px.begin(), px.end()) - px.begin());
    const auto k_csv = static_cast<std::size_t>(std::max_element(map.values.begin(), map.values.end()) - map.values.begin());
    CHECK(px[k_pgm] == 255);
    CHECK((h - 1 - k_pgm / w) * w + k_pgm % w == k_csv);

    const auto rep = (dir / "eval.json").string();
    REQUIRE(run({"evaluate", "--rem", csv, "--scene", scene, "--out", rep, "--csv", (dir / "eval.csv").string(),
                 "--label", "reveal"}) == 0);
    const auto got = eval_report_from_json(nlohmann::json::parse(slurp(rep)));
    const auto expect = evaluate(predict_rem(stored.model, s.grid).values, s.truth);
    CHECK(std::abs(got.rmse - expect.rmse) < 1e-9);
    CHECK(std::abs(got.mae - expect.mae) < 1e-9);
    CHECK(std::abs(got.r_squared - expect.r_squared) < 1e-9);
    CHECK(slurp(dir / "eval.csv").find("\nreveal,") != std::string::npos);

    REQUIRE(run({"evaluate", "--rem", csv, "--scene", scene, "--observations", val, "--out", rep}) == 0);
    CHECK(eval_report_from_json(nlohmann::json::parse(slurp(rep))).n_points == 10);

    const auto fixed = (dir / "fixed.pgm").string();
    REQUIRE(run({"predict", "--model", ck, "--out-csv", (dir / "r2.csv").string(), "--out-pgm", fixed, "--pgm-min",
                 "-120", "--pgm-max", "0"}) == 0);
    CHECK(slurp(fixed).find("# rssi_dbm_min=-120 rssi_dbm_max=0") != std::string::npos);
  }

  SUBCASE("statistical-model variants train") {
    CHECK(run({"train", "--config", c, "--train", train, "--scene", scene, "--method", "pinnitu", "--epochs", "5",
               "--out", (dir / "p.ckpt").string()}) == 0);
    CHECK(run({"train", "--config", c, "--train", train, "--method", "kriging", "--out", (dir / "k.ckpt").string()}) ==
          2);
  }

  SUBCASE("divergence exits with code 3") {
    CHECK(run({"train", "--config", c, "--set", "model.learning_rate=1e100", "--train", train, "--scene", scene,
               "--epochs", "20", "--out", (dir / "d.ckpt").string()}) == 3);
  }

  SUBCASE("corrupt checkpoint exits with code 4") {
    std::ofstream(dir / "bad.ckpt") << "{\"format\":\"nope\"}\n";
    CHECK(run({"predict", "--model", (dir / "bad.ckpt").string(), "--out-csv", (dir / "z.csv").string()}) == 4);
  }
}

TEST_CASE("evaluate on reference maps") {
  const auto dir = temp_dir("evaluate");
  const auto cfg = small_config(dir);
  REQUIRE(run({"generate", "--config", cfg.string(), "--out", dir.string()}) == 0);
  const auto scene_path = (dir / "scene.json").string();
  const Scene s = read_scene(scene_path);

  write_rem_csv(RemMap{s.grid, s.truth, std::nullopt}, dir / "truth.csv");
  REQUIRE(run({"evaluate", "--rem", (dir / "truth.csv").string(), "--scene", scene_path, "--out",
               (dir / "t.json").string()}) == 0);
  const auto t = eval_report_from_json(nlohmann::json::parse(slurp(dir / "t.json")));
  CHECK(t.rmse == 0.0);
  CHECK(t.r_squared == 1.0);

  double mean = 0.0;
  for (double v : s.truth) mean += v;
  mean /= s.truth.size();
  write_rem_csv(RemMap{s.grid, std::vector<double>(s.truth.size(), mean), std::nullopt}, dir / "mean.csv");
  REQUIRE(run({"evaluate", "--rem", (dir / "mean.csv").string(), "--scene", scene_path, "--out",
               (dir / "m.json").string()}) == 0);
  CHECK(std::abs(eval_report_from_json(nlohmann::json::parse(slurp(dir / "m.json"))).r_squared) < 1e-9);

  const Grid other(0, 800, 0, 800, 8, 8);
  write_rem_csv(RemMap{other, std::vector<double>(64, -60.0), std::nullopt}, dir / "other.csv");
  CHECK(run({"evaluate", "--rem", (dir / "other.csv").string(), "--scene", scene_path, "--out",
             (dir / "o.json").string()}) == 2);
}

TEST_CASE("lambda sweep from the evaluate command") {
  const auto dir = temp_dir("sweep");
  const auto cfg = small_config(dir, {{"training", {{"epochs", 10}}}});
  const auto out = (dir / "sweep.csv").string();
  REQUIRE(run({"evaluate", "--sweep-lambda", "--config", cfg.string(), "--seed", "1", "--seed", "2", "--out", out}) ==
          0);
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "method,seed,lambda,train_size,rmse_db,mae_db,r_squared,n_points,stop_epoch");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * 3);
  CHECK(fs::exists(dir / "sweep.summary.csv"));
}

TEST_CASE("ingest") {
  const auto dir = temp_dir("ingest");
  SUBCASE("projection") {
    std::ofstream(dir / "geo.csv") << "lat,lon,rssi_dbm,channel\n40.0000,-80.0000,-60,C3\n40.0010,-80.0000,-61,C3\n"
                                      "40.0005,-80.0010,-62,C3\n40.0005,-79.9990,-63,C3\n";
    const auto g = cli::ingest_geo_csv(dir / "geo.csv");
    CHECK(g.projection.lat0_deg == doctest::Approx(40.0005));
    CHECK(g.projection.lon0_deg == doctest::Approx(-80.0));
    const auto& p = g.observations.points;
    CHECK(std::abs(p[1].y - p[0].y - 111.2) < 0.5);
    CHECK(std::abs(p[2].x) > 80.0);
    CHECK(std::abs(p[2].y) < 1e-6);
    CHECK(std::abs(p[2].x + p[3].x) < 1e-6);
    CHECK(g.observations.channel == "C3");

    REQUIRE(run({"ingest", "--in", (dir / "geo.csv").string(), "--out", (dir / "obs.csv").string()}) == 0);
    const auto obs = read_observations(dir / "obs.csv");
    CHECK(obs.size() == 4);
    CHECK(obs.channel == "C3");
  }
  SUBCASE("centroid maps to the origin") {
    std::ofstream(dir / "c.csv") << "lat,lon,rssi_dbm\n10.0,20.0,-50\n10.002,20.002,-55\n10.001,20.001,-52\n";
    const auto g = cli::ingest_geo_csv(dir / "c.csv");
    CHECK(std::abs(g.observations.points[2].x) < 1e-6);
    CHECK(std::abs(g.observations.points[2].y) < 1e-6);
  }
  SUBCASE("malformed rows report the line") {
    std::ofstream(dir / "bad.csv") << "lat,lon,rssi_dbm\n10,20,-50\n10.1,abc,-51\n";
    try {
      cli::ingest_geo_csv(dir / "bad.csv");
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    CHECK(run({"ingest", "--in", (dir / "bad.csv").string(), "--out", (dir / "o.csv").string()}) == 4);
  }
  SUBCASE("duplicates are rejected") {
    std::ofstream(dir / "dup.csv") << "lat,lon,rssi_dbm\n10,20,-50\n10,20,-51\n";
    CHECK_THROWS_AS(cli::ingest_geo_csv(dir / "dup.csv"), IoError);
  }
}

TEST_CASE("bench command") {
  const auto dir = temp_dir("bench");
  const auto cfg = small_config(dir, {{"methods", {"reveal", "fcnn", "kriging", "3gpp"}}, {"training", {{"epochs", 10}}}});
  REQUIRE(run({"bench", "--config", cfg.string(), "--out", (dir / "a").string()}) == 0);
  const auto first = snapshot(dir / "a");
  REQUIRE(run({"reveal-bench", "--config", cfg.string(), "--out", (dir / "a").string()}) == 0);
  CHECK(snapshot(dir / "a") == first);
  CHECK(first.count("bench.manifest.json") == 1);
  CHECK(first.at("table.csv").rfind("method,lambda,train_size,seeds,median_rmse_db", 0) == 0);
}

TEST_CASE("exit codes from the binary") {
  const std::string bin = REVEAL_BINARY;
  const auto dir = temp_dir("exit");
  CHECK(system_exit(bin + " --help") == 0);
  CHECK(system_exit(bin + " frobnicate") == 2);
  CHECK(system_exit(bin + " generate --config " + (dir / "missing.json").string()) == 4);
  std::ofstream(dir / "bad.json") << "{\"unknown_key\": 1}";
  CHECK(system_exit(bin + " generate --config " + (dir / "bad.json").string()) == 2);
  const auto cfg = small_config(dir);
  CHECK(system_exit(bin + " generate --config " + cfg.string() + " --out " + (dir / "g").string()) == 0);
}
