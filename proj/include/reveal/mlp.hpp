#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "reveal/autodiff.hpp"
#include "reveal/grid.hpp"
#include "reveal/rng.hpp"

namespace reveal {

enum class Activation { relu };
enum class Mode { train, eval };

/// Fully connected regressor layout. Defaults are the tuned ReVeal values.
struct MlpSpec {
  std::size_t input_dim = 2;
  std::size_t hidden_layers = 3;
  std::size_t width = 304;
  Activation activation = Activation::relu;
  double dropout_rate = 0.2;
  std::size_t output_dim = 1;
  double learning_rate = 0.00369;

  void validate() const;
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Weight matrices (out x in) and bias vectors, one per affine layer.
struct Parameters {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  std::size_t count() const;
  bool same_shape(const Parameters& other) const;
  bool all_finite() const;
  /// Zero-valued parameters of the same shape.
  Parameters zeros_like() const;

  /// Layer by layer: weights column-major, then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

struct MlpModel {
  MlpSpec spec;
  Parameters params;
};

/// He-uniform weights (limit sqrt(6 / fan_in)), zero biases.
MlpModel init(const MlpSpec& spec, std::uint64_t seed);

/// Single-point forward pass. Train mode draws a fresh dropout mask from
/// `dropout_seed`; eval mode is deterministic.
double forward(const MlpModel& m, const UnitPoint& p, Mode mode, std::uint64_t dropout_seed = 0);

/// Eval-mode outputs for many points.
std::vector<double> predict(const MlpModel& m, std::span<const UnitPoint> points);

struct Query {
  UnitPoint point;
  Mode mode = Mode::eval;
};

/// Scalar loss built on a tape from the network outputs at the queries.
using LossFn = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

struct GradResult {
  double loss = 0.0;
  std::vector<double> outputs;  ///< network output per query
  Parameters grads;
};

/// Exact reverse-mode gradient of loss_fn(outputs at queries) with respect to
/// every parameter. One dropout mask per train-mode query is drawn from
/// `dropout_rng` and held for the whole evaluation. Throws NumericError on
/// non-finite parameters or loss.
GradResult grad(const MlpModel& m, std::span<const Query> queries, const LossFn& loss_fn,
                Rng& dropout_rng);

struct AdamState {
  Parameters first_moment;
  Parameters second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_model(const MlpModel& m);
};

/// Bias-corrected Adam update in place.
void adam_step(MlpModel& m, const Parameters& grads, AdamState& state, double lr);

// Checkpoint file: one line of JSON header, then the parameters as raw
// little-endian float64. The header carries format, version, spec, seed,
// parameter_count and a free-form metadata object.
struct Checkpoint {
  MlpModel model;
  std::uint64_t seed = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const nlohmann::json& j);

}  // namespace reveal
