#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "reveal/error.hpp"
#include "reveal/experiment.hpp"
#include "reveal/rem_map.hpp"

using namespace reveal;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("reveal_test_experiment_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.grid = Grid(0, 800, 0, 800, 16, 16);
  c.tx = {{410, 390}, 43.0, 3.2, 1.0};
  c.shadow.correlation_length_m = 150.0;
  c.train_size = 20;
  c.val_size = 10;
  c.test_size = 40;
  c.sample_sizes = {12, 20};
  c.lambdas = {0.0, 0.9, 1.0};
  c.seeds = {1, 2};
  c.model.width = 16;
  c.model.hidden_layers = 2;
  c.training.epochs = 30;
  return c;
}

std::set<std::pair<double, double>> as_set(const std::vector<Point>& pts) {
  std::set<std::pair<double, double>> s;
  for (const auto& p : pts) s.insert({p.x, p.y});
  return s;
}

}  // namespace

TEST_CASE("config defaults") {
  const ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.shadow.sigma_db == 8.0);
  CHECK(c.shadow.correlation_length_m == 500.0);
  CHECK(c.train_size == 30);
  CHECK(c.test_size == 200);
  CHECK(c.training.lambda == 0.9);
  CHECK(c.sample_sweep_lambda == 0.99);
  CHECK(c.map_lambda == 0.999);
  CHECK(c.lambdas == std::vector<double>{0.0, 0.5, 0.9, 0.99, 0.999, 1.0});
  CHECK(c.statmodel.carrier_ghz == 0.6);
}

TEST_CASE("config json round trip") {
  const auto c = small_config();
  const auto j = to_json(c);
  const auto back = experiment_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.grid == c.grid);
  CHECK(back.model == c.model);

  const auto partial = experiment_config_from_json(nlohmann::json{{"seeds", {7}}, {"training", {{"lambda", 0.5}}}});
  CHECK(partial.seeds == std::vector<std::uint64_t>{7});
  CHECK(partial.training.lambda == 0.5);
  CHECK(partial.training.patience == 200);
}

TEST_CASE("config rejects unknown keys at every level") {
  const auto j = to_json(ExperimentConfig{});
  for (const std::string section : {"", "grid", "transmitter", "shadow", "model", "training", "statmodel"}) {
    auto bad = j;
    if (section.empty()) {
      bad["extra"] = 1;
    } else {
      bad[section]["extra"] = 1;
    }
    CHECK_THROWS_AS(experiment_config_from_json(bad), ConfigError);
  }
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json::array()), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"seeds", "one"}}), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"grid", {{"rows", 0}}}}), ConfigError);
}

TEST_CASE("config validation") {
  auto c = ExperimentConfig{};
  c.tx.location = {5000, 0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.methods = {"reveal", "sionna"};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.lambdas = {1.5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.sampling = "grid";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.test_size = 250;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config files") {
  const auto dir = temp_dir("cfg");
  std::ofstream(dir / "ok.json") << to_json(small_config()).dump(2);
  CHECK(load_experiment_config(dir / "ok.json").train_size == 20);
  std::ofstream(dir / "bad.json") << "{\"seeds\": [1,";
  CHECK_THROWS_AS(load_experiment_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_experiment_config(dir / "none.json"), IoError);
}

TEST_CASE("scenario splits") {
  const ExperimentConfig c;
  const auto s = make_scenario(c, 3, 30);
  CHECK(s.train.size() == 30);
  CHECK(s.val.size() == 50);
  CHECK(s.test_points.size() == 200);
  const auto tr = as_set(s.train.points);
  const auto va = as_set(s.val.points);
  const auto te = as_set(s.test_points);
  CHECK(tr.size() == 30);
  CHECK(te.size() == 200);
  for (const auto& p : tr) {
    CHECK(va.count(p) == 0);
    CHECK(te.count(p) == 0);
  }
  for (const auto& p : va) CHECK(te.count(p) == 0);
  for (std::size_t k = 0; k < s.test_points.size(); ++k) CHECK(s.test_truth[k] == s.scene.interpolate(s.test_points[k]));
  for (std::size_t k = 0; k < s.train.size(); ++k) CHECK(s.train.rssi_dbm[k] == s.scene.interpolate(s.train.points[k]));

  const auto s16 = make_scenario(c, 3, 16);
  CHECK(s16.test_points == s.test_points);
  CHECK(s16.val.points == s.val.points);
  CHECK(s16.train.size() == 16);

  const auto again = make_scenario(c, 3, 30);
  CHECK(again.train.points == s.train.points);
  CHECK(again.scene.truth == s.scene.truth);
  CHECK(make_scenario(c, 4, 30).scene.truth != s.scene.truth);
}

TEST_CASE("cell selection") {
  const Grid g(0, 100, 0, 100, 10, 10);
  const auto centers = g.cell_centers();
  CHECK(select_cells(centers, 10, "lpm", 1).size() == 10);
  CHECK(select_cells(centers, 10, "random", 1).size() == 10);
  CHECK(select_cells(centers, 100, "lpm", 1).size() == 100);
  CHECK_THROWS_AS(select_cells(centers, 10, "grid", 1), ConfigError);
}

TEST_CASE("non-neural methods") {
  const ExperimentConfig c;
  const auto s = make_scenario(c, 1, 30);
  for (const std::string m : {"kriging", "3gpp", "itu", "logdist"}) {
    const auto r = run_method(c, s, m, 1);
    CHECK(r.method == m);
    CHECK(r.test.n_points == 200);
    CHECK(r.test.rmse > 0.0);
    CHECK(r.test_predictions.size() == 200);
    CHECK_FALSE(r.train.has_value());
  }
  CHECK_THROWS_AS(run_method(c, s, "sionna", 1), ConfigError);
}

TEST_CASE("neural methods record their training") {
  const auto c = small_config();
  const auto s = make_scenario(c, 1, c.train_size);
  const auto fc = run_method(c, s, "fcnn", 1, 0.9);
  CHECK(fc.lambda == 0.0);
  REQUIRE(fc.train.has_value());
  CHECK(fc.train->stop_epoch == 30);
  const auto rv = run_method(c, s, "reveal", 1, 0.0);
  CHECK(rv.test_predictions == fc.test_predictions);
  const auto pg = run_method(c, s, "pinn3gpp", 1);
  CHECK(pg.lambda == c.training.lambda);
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS(median({}));
}

TEST_CASE("run tables") {
  const auto dir = temp_dir("tables");
  MethodRun a;
  a.method = "kriging";
  a.seed = 1;
  a.train_size = 30;
  a.test.rmse = 4.0;
  a.test.wall_time_s = 0.5;
  MethodRun b = a;
  b.seed = 2;
  b.test.rmse = 6.0;
  MethodRun c = a;
  c.seed = 3;
  c.test.rmse = 5.5;
  write_runs_csv(dir / "runs.csv", {a, b, c}, false);
  write_summary_csv(dir / "sum.csv", {a, b, c}, false);
  std::istringstream runs(slurp(dir / "runs.csv"));
  std::string line;
  std::getline(runs, line);
  CHECK(line == "method,seed,lambda,train_size,rmse_db,mae_db,r_squared,n_points,stop_epoch");
  std::getline(runs, line);
  CHECK(line.rfind("kriging,1,0,30,4,", 0) == 0);
  std::istringstream sum(slurp(dir / "sum.csv"));
  std::getline(sum, line);
  std::getline(sum, line);
  CHECK(line.rfind("kriging,0,30,3,5.5,", 0) == 0);
  write_runs_csv(dir / "timed.csv", {a}, true);
  CHECK(slurp(dir / "timed.csv").find(",wall_time_s\n") != std::string::npos);
}

TEST_CASE("rem map files") {
  const auto dir = temp_dir("rem");
  const Grid g(0, 40, 0, 30, 3, 4);
  RemMap m{g, {-90, -80, -70, -60, -85, -75, -65, -55, -50, -45, -40, -35}, std::nullopt};
  m.validate();
  write_rem_csv(m, dir / "rem.csv");
  const auto csv = slurp(dir / "rem.csv");
  CHECK(csv.rfind("i,j,x_m,y_m,rssi_dbm\n", 0) == 0);
  const auto back = read_rem_csv(dir / "rem.csv", g);
  CHECK(back.values == m.values);
  CHECK_THROWS_AS(read_rem_csv(dir / "rem.csv", Grid(0, 40, 0, 30, 3, 5)), ConfigError);
  CHECK_THROWS_AS(read_rem_csv(dir / "rem.csv", Grid(0, 80, 0, 30, 3, 4)), ConfigError);

  write_rem_pgm(m, dir / "rem.pgm");
  std::istringstream pgm(slurp(dir / "rem.pgm"));
  std::string magic, comment;
  pgm >> magic;
  CHECK(magic == "P2");
  pgm >> std::ws;
  std::getline(pgm, comment);
  CHECK(comment.rfind("# rssi_dbm_min=-90 rssi_dbm_max=-35", 0) == 0);
  std::size_t w = 0, h = 0, maxv = 0;
  pgm >> w >> h >> maxv;
  CHECK(w == 4);
  CHECK(h == 3);
  CHECK(maxv == 255);
  std::vector<int> px(12);
  for (auto& v : px) pgm >> v;
  // North row first: row i = 2 holds the largest values.
  CHECK(px[0] == static_cast<int>(std::lround(255.0 * 40.0 / 55.0)));
  CHECK(px[3] == 255);
  CHECK(px[8] == 0);
  const auto arg_pgm = std::max_element(px.begin(), px.end()) - px.begin();
  const auto arg_csv = std::max_element(m.values.begin(), m.values.end()) - m.values.begin();
  CHECK(arg_pgm == 3);
  CHECK(arg_csv == 11);

  RemMap bad{g, {1, 2, 3}, std::nullopt};
  CHECK_THROWS(bad.validate());
  bad.values.assign(12, std::nan(""));
  CHECK_THROWS(bad.validate());
}

TEST_CASE("bench writes deterministic tables") {
  auto c = small_config();
  c.methods = {"reveal", "fcnn", "kriging", "3gpp", "itu", "pinn3gpp", "pinnitu", "logdist"};
  const auto d1 = temp_dir("bench1");
  const auto d2 = temp_dir("bench2");
  c.output_dir = d1;
  const auto r = run_bench(c, false);
  c.output_dir = d2;
  run_bench(c, false);
  CHECK(r.table.size() == 2 * 8);
  CHECK(r.sample_sweep.size() == 2 * 2);
  CHECK(r.lambda_sweep.size() == 2 * 3);
  for (const std::string f : {"table.csv", "table_runs.csv", "sample_size.csv", "sample_size_runs.csv",
                              "lambda_sweep.csv", "lambda_sweep_runs.csv", "loss_reveal.csv", "loss_fcnn.csv",
                              "rem.csv", "rem.pgm", "abs_error.pgm", "ecdf.csv"}) {
    INFO(f);
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  CHECK(slurp(d1 / "rem.csv").rfind("i,j,x_m,y_m,rssi_dbm,abs_err_db\n", 0) == 0);
  CHECK(slurp(d1 / "table.csv").find("wall_time") == std::string::npos);
}
