#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "reveal/grid.hpp"
#include "reveal/mlp.hpp"
#include "reveal/rem_map.hpp"
#include "reveal/scene.hpp"

namespace reveal {

struct LossConfig {
  double lambda = 0.9;
  /// Stencil step in normalized units; 0 means one grid cell pitch.
  double stencil_step = 0.0;
  std::size_t mls_neighbors = 8;
  std::size_t epochs = 2000;
  bool early_stopping = true;
  std::size_t patience = 200;
  double tolerance = 1e-4;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Discrete Laplacians

struct StencilTap {
  UnitPoint point;
  double weight = 0.0;
};

/// Second-difference taps for the Laplacian at p. Each axis uses the central
/// three-point rule when p +- h stays inside [lo, hi]; otherwise the
/// three-point rule is shifted inwards and `one_sided` is set.
struct Stencil {
  std::vector<StencilTap> taps;
  bool one_sided = false;
};

Stencil laplacian_stencil(const UnitPoint& p, double h, double lo = 0.0, double hi = 1.0);

struct LaplacianValue {
  double value = 0.0;
  bool one_sided = false;
};

/// Stencil applied to an arbitrary field. The default bounds never trigger
/// the one-sided variant. Throws NumericError on a non-finite evaluation.
LaplacianValue fd_laplacian(const std::function<double(double, double)>& f, const UnitPoint& p,
                            double h, double lo = -std::numeric_limits<double>::infinity(),
                            double hi = std::numeric_limits<double>::infinity());

/// Stencil applied to the eval-mode network on the unit square.
LaplacianValue fd_laplacian(const MlpModel& m, const UnitPoint& p, double h);

/// Weighted quadratic fit over the k nearest samples, Gaussian weights with
/// bandwidth equal to the k-th neighbor distance. Returns 2(a_xx + a_yy) in
/// value units per coordinate unit squared. Throws NumericError("degenerate
/// neighborhood") when the design is rank deficient.
double mls_laplacian(std::span<const Point> points, std::span<const double> values,
                     const Point& p, std::size_t k);

/// Same estimate in the metric frame: dB per m^2.
double mls_laplacian(const ObservationSet& obs, const Point& p, std::size_t k);

// ---------------------------------------------------------------------------
// Training data in model units

/// Affine map between dBm and the standardized network output.
struct TargetScaling {
  double mean = 0.0;
  double stddev = 1.0;

  double to_model(double dbm) const { return (dbm - mean) / stddev; }
  double to_dbm(double y) const { return mean + stddev * y; }
  /// Mean and population standard deviation (1 when the data are constant).
  static TargetScaling fit(std::span<const double> dbm);
};

struct TrainingSet {
  Grid frame;
  TargetScaling scaling;
  std::vector<UnitPoint> train_points;
  std::vector<double> train_targets;
  std::vector<UnitPoint> val_points;
  std::vector<double> val_targets;
};

/// Normalizes coordinates to the frame and standardizes RSSI with the
/// training statistics. Throws ConfigError when train and val share a point.
TrainingSet make_training_set(const Grid& frame, const ObservationSet& train,
                              const ObservationSet& val);

/// MLS Laplacian of the standardized targets at every training point, in
/// model units per unit square.
struct LaplacianTargets {
  std::vector<double> values;
};

LaplacianTargets laplacian_targets(const TrainingSet& set, std::size_t k);

/// Physics term of the ReVeal loss: match the stencil Laplacian to targets.
struct LaplacianPrior {
  LaplacianTargets targets;
};

/// Physics term replaced by a reference surface: match the network output
/// at the training points to the given model-unit values.
struct SurfacePrior {
  std::vector<double> values;
};

using PhysicsPrior = std::variant<LaplacianPrior, SurfacePrior>;

// ---------------------------------------------------------------------------
// Losses

/// Eval-mode MSE in model units.
double data_loss(const MlpModel& m, std::span<const UnitPoint> points,
                 std::span<const double> targets);

/// Mean squared difference between the stencil Laplacian and the targets.
double physics_loss(const MlpModel& m, std::span<const UnitPoint> points,
                    const LaplacianTargets& targets, double h);

/// Default stencil step: one cell pitch of the frame in normalized units.
double default_stencil_step(const Grid& frame);

// ---------------------------------------------------------------------------
// Training

struct TrainReport {
  double lambda = 0.0;
  std::vector<double> data_loss;
  std::vector<double> physics_loss;
  std::vector<double> total_loss;
  std::vector<double> val_data_loss;  ///< empty when there is no validation set
  std::size_t stop_epoch = 0;         ///< epochs actually run
  std::size_t best_epoch = 0;         ///< 1-based epoch of the restored weights
  bool early_stopped = false;
  double wall_time_s = 0.0;
};

/// Header `epoch,L_d,L_p,L_total,val_L_d`; val_L_d is empty without validation.
void write_train_report_csv(const TrainReport& r, const std::filesystem::path& path);

/// Trained network plus everything needed to answer queries in dBm.
struct RemModel {
  MlpModel net;
  Grid frame;
  TargetScaling scaling;

  double predict(const Point& p) const;
  std::vector<double> predict(std::span<const Point> points) const;
};

/// Checkpoint whose metadata also records the frame and the target scaling
/// under the keys "frame" and "scaling".
void write_rem_model(const std::filesystem::path& path, const RemModel& m, std::uint64_t seed,
                     nlohmann::json metadata = nlohmann::json::object());

struct StoredRemModel {
  RemModel model;
  std::uint64_t seed = 0;
  nlohmann::json metadata;
};

StoredRemModel read_rem_model(const std::filesystem::path& path);

struct TrainResult {
  RemModel model;
  TrainReport report;
};

/// Full-batch Adam on (1 - lambda) L_d + lambda L_p. With early stopping
/// the weights with the best validation L_d are restored. Throws
/// DivergenceError carrying the 1-based epoch on a non-finite loss.
TrainResult train(const MlpModel& m0, const TrainingSet& set, const PhysicsPrior& prior,
                  const LossConfig& cfg, std::uint64_t seed);

/// ReVeal training: MLS targets from the training observations.
TrainResult train(const MlpModel& m0, const Grid& frame, const ObservationSet& train_obs,
                  const ObservationSet& val_obs, const LossConfig& cfg, std::uint64_t seed);

/// Fresh network from the init stream of `seed`, then ReVeal training.
TrainResult train_reveal(const Grid& frame, const ObservationSet& train_obs, const ObservationSet& val_obs,
                         const MlpSpec& spec, const LossConfig& cfg, std::uint64_t seed);

/// Eval-mode prediction at every cell center of `grid`.
RemMap predict_rem(const RemModel& m, const Grid& grid);

nlohmann::json to_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const nlohmann::json& j);

}  // namespace reveal
