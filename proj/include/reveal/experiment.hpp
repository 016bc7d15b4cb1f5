#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "reveal/baselines.hpp"
#include "reveal/metrics.hpp"
#include "reveal/mlp.hpp"
#include "reveal/physics.hpp"
#include "reveal/scene.hpp"

namespace reveal {

struct ShadowSpec {
  double sigma_db = 8.0;
  double correlation_length_m = 500.0;
  ShadowMethod method = ShadowMethod::circulant;
};

/// Everything a run needs. Unknown keys in the JSON form are rejected.
struct ExperimentConfig {
  Grid grid{0.0, 3200.0, 0.0, 3200.0, 64, 64};
  Transmitter tx{{1600.0, 1600.0}, 43.0, 3.2, 1.0};
  ShadowSpec shadow;
  double min_distance_m = 0.0;
  double noise_sigma_db = 0.0;
  std::string sampling = "lpm";
  std::size_t train_size = 30;
  std::size_t val_size = 50;
  std::size_t test_size = 200;
  std::vector<std::size_t> sample_sizes{16, 30};
  double sample_sweep_lambda = 0.99;
  double map_lambda = 0.999;
  std::vector<double> lambdas{0.0, 0.5, 0.9, 0.99, 0.999, 1.0};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> methods{"reveal", "fcnn", "kriging", "3gpp", "itu", "pinn3gpp", "pinnitu"};
  MlpSpec model;
  LossConfig training;
  StatModelParams statmodel;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Method tags accepted by run_method.
const std::vector<std::string>& known_methods();

/// One seeded instance: scene, training, validation and held-out test sets.
/// The test and validation cells are drawn first and do not depend on the
/// training size, so sample-size sweeps share them.
struct Scenario {
  Scene scene;
  ObservationSet train;
  ObservationSet val;
  std::vector<Point> test_points;
  std::vector<double> test_truth;
};

Scene make_scene(const ExperimentConfig& c, std::uint64_t seed);
Scenario make_scenario(const ExperimentConfig& c, std::uint64_t seed, std::size_t train_size);
Scenario make_scenario(const ExperimentConfig& c, const Scene& scene, std::uint64_t seed,
                       std::size_t train_size);

/// Spatially balanced (lpm) or simple random (random) choice of n cells.
std::vector<std::size_t> select_cells(const std::vector<Point>& candidates, std::size_t n,
                                      const std::string& method, std::uint64_t seed);

struct MethodRun {
  std::string method;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  std::size_t train_size = 0;
  EvalReport test;
  std::optional<TrainReport> train;
  std::vector<double> test_predictions;
};

/// Fits or trains one method on the scenario and scores it on the test set.
/// `lambda` overrides the training config for the network methods.
MethodRun run_method(const ExperimentConfig& c, const Scenario& s, const std::string& method,
                     std::uint64_t seed, std::optional<double> lambda = std::nullopt);

/// Per-seed method comparison, sample-size sweep and lambda sweep written
/// as CSV tables to the output directory. Wall times are only written when
/// `timing` is set so that repeated runs produce identical files.
struct BenchSummary {
  std::vector<MethodRun> table;
  std::vector<MethodRun> sample_sweep;
  std::vector<MethodRun> lambda_sweep;
};

BenchSummary run_bench(const ExperimentConfig& c, bool timing);

/// ReVeal at every configured lambda for each seed.
std::vector<MethodRun> run_lambda_sweep(const ExperimentConfig& c);

/// One row per run.
void write_runs_csv(const std::filesystem::path& path, const std::vector<MethodRun>& runs, bool timing);
/// Median over seeds per (method, lambda, train size), first-appearance order.
void write_summary_csv(const std::filesystem::path& path, const std::vector<MethodRun>& runs, bool timing);

double median(std::vector<double> v);

}  // namespace reveal
