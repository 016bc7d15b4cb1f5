#include "reveal/mlp.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "reveal/error.hpp"

namespace reveal {

void MlpSpec::validate() const {
  if (input_dim == 0 || hidden_layers == 0 || width == 0 || output_dim == 0) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  if (input_dim != 2) throw std::invalid_argument("network input must be 2-D coordinates");
  if (output_dim != 1) throw std::invalid_argument("network output must be scalar");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout rate outside [0, 1)");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

bool Parameters::same_shape(const Parameters& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols() ||
        biases[l].size() != other.biases[l].size()) {
      return false;
    }
  }
  return true;
}

bool Parameters::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

Parameters Parameters::zeros_like() const {
  Parameters z;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    z.weights.push_back(Eigen::MatrixXd::Zero(weights[l].rows(), weights[l].cols()));
    z.biases.push_back(Eigen::VectorXd::Zero(biases[l].size()));
  }
  return z;
}

std::vector<double> Parameters::flatten() const {
  std::vector<double> flat;
  flat.reserve(count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data(), weights[l].data() + weights[l].size());
    flat.insert(flat.end(), biases[l].data(), biases[l].data() + biases[l].size());
  }
  return flat;
}

void Parameters::assign(std::span<const double> flat) {
  if (flat.size() != count()) throw std::invalid_argument("flat parameter size mismatch");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), weights[l].size(), weights[l].data());
    k += static_cast<std::size_t>(weights[l].size());
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), biases[l].size(), biases[l].data());
    k += static_cast<std::size_t>(biases[l].size());
  }
}

namespace {

Parameters shaped_zero(const MlpSpec& spec) {
  Parameters p;
  std::size_t fan_in = spec.input_dim;
  for (std::size_t l = 0; l < spec.hidden_layers; ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(spec.width, fan_in));
    p.biases.push_back(Eigen::VectorXd::Zero(spec.width));
    fan_in = spec.width;
  }
  p.weights.push_back(Eigen::MatrixXd::Zero(spec.output_dim, fan_in));
  p.biases.push_back(Eigen::VectorXd::Zero(spec.output_dim));
  return p;
}

// Activations kept for the backward pass. inputs[l] feeds affine layer l;
// gates[l] = relu'(z_l) * dropout_scale for hidden layer l.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> gates;
  Eigen::RowVectorXd output;
};

Eigen::MatrixXd input_matrix(std::span<const Query> queries) {
  Eigen::MatrixXd x(2, static_cast<Eigen::Index>(queries.size()));
  for (std::size_t k = 0; k < queries.size(); ++k) {
    x(0, static_cast<Eigen::Index>(k)) = queries[k].point.u;
    x(1, static_cast<Eigen::Index>(k)) = queries[k].point.v;
  }
  return x;
}

// Column c of the returned matrix scales hidden units of query c: 1 in eval
// mode, 0 or 1/(1-p) in train mode (inverted dropout).
Eigen::MatrixXd dropout_mask(const MlpSpec& spec, std::span<const Query> queries, Rng& rng) {
  const auto cols = static_cast<Eigen::Index>(queries.size());
  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(spec.width), cols);
  if (spec.dropout_rate == 0.0) return mask;
  const double keep = 1.0 - spec.dropout_rate;
  std::bernoulli_distribution draw(keep);
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (queries[static_cast<std::size_t>(c)].mode == Mode::eval) continue;
    for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = draw(rng) ? 1.0 / keep : 0.0;
  }
  return mask;
}

bool any_train(std::span<const Query> queries) {
  for (const auto& q : queries) {
    if (q.mode == Mode::train) return true;
  }
  return false;
}

ForwardCache forward_cached(const MlpModel& m, std::span<const Query> queries, Rng* rng) {
  const auto& p = m.params;
  const std::size_t hidden = p.weights.size() - 1;
  const bool train = any_train(queries) && m.spec.dropout_rate > 0.0;

  ForwardCache cache;
  cache.inputs.reserve(hidden + 1);
  cache.gates.reserve(hidden);
  cache.inputs.push_back(input_matrix(queries));
  for (std::size_t l = 0; l < hidden; ++l) {
    Eigen::MatrixXd z = p.weights[l] * cache.inputs.back();
    z.colwise() += p.biases[l];
    // relu(z) * scale == z * gate, and gate is also d(output)/dz.
    Eigen::MatrixXd gate = (z.array() > 0.0).cast<double>().matrix();
    if (train) gate.array() *= dropout_mask(m.spec, queries, *rng).array();
    cache.inputs.push_back(z.cwiseProduct(gate));
    cache.gates.push_back(std::move(gate));
  }
  Eigen::MatrixXd out = p.weights[hidden] * cache.inputs.back();
  out.colwise() += p.biases[hidden];
  cache.output = out.row(0);
  return cache;
}

}  // namespace

MlpModel init(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  MlpModel m{spec, shaped_zero(spec)};
  Rng rng(seed);
  for (auto& w : m.params.weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = u(rng);
  }
  return m;
}

double forward(const MlpModel& m, const UnitPoint& p, Mode mode, std::uint64_t dropout_seed) {
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) throw std::invalid_argument("non-finite input");
  if (!m.params.all_finite()) throw NumericError("non-finite network parameters");
  Rng rng(dropout_seed);
  const Query q{p, mode};
  return forward_cached(m, std::span<const Query>(&q, 1), &rng).output(0);
}

std::vector<double> predict(const MlpModel& m, std::span<const UnitPoint> points) {
  if (!m.params.all_finite()) throw NumericError("non-finite network parameters");
  std::vector<Query> queries;
  queries.reserve(points.size());
  for (const auto& p : points) queries.push_back({p, Mode::eval});
  std::vector<double> out(points.size());
  // Chunked to bound the activation memory on full-grid predictions.
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < queries.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, queries.size() - start);
    const auto cache = forward_cached(m, std::span<const Query>(queries).subspan(start, len), nullptr);
    for (std::size_t k = 0; k < len; ++k) out[start + k] = cache.output(static_cast<Eigen::Index>(k));
  }
  return out;
}

GradResult grad(const MlpModel& m, std::span<const Query> queries, const LossFn& loss_fn,
                Rng& dropout_rng) {
  if (queries.empty()) throw std::invalid_argument("gradient needs at least one query");
  if (!m.params.all_finite()) throw NumericError("non-finite network parameters");

  const ForwardCache cache = forward_cached(m, queries, &dropout_rng);

  ad::Tape tape;
  std::vector<ad::Var> outputs;
  outputs.reserve(queries.size());
  for (Eigen::Index k = 0; k < cache.output.size(); ++k) outputs.push_back(tape.variable(cache.output(k)));
  const ad::Var loss = loss_fn(tape, outputs);
  if (!std::isfinite(loss.value())) throw NumericError("non-finite loss");
  const std::vector<double> adj = tape.gradient(loss);

  Eigen::RowVectorXd delta(cache.output.size());
  for (Eigen::Index k = 0; k < delta.size(); ++k) delta(k) = adj[outputs[static_cast<std::size_t>(k)].index()];

  GradResult result;
  result.loss = loss.value();
  result.outputs.assign(cache.output.data(), cache.output.data() + cache.output.size());
  result.grads = m.params.zeros_like();

  const auto& p = m.params;
  const std::size_t hidden = p.weights.size() - 1;
  result.grads.weights[hidden].noalias() = delta * cache.inputs[hidden].transpose();
  result.grads.biases[hidden](0) = delta.sum();
  Eigen::MatrixXd upstream = p.weights[hidden].transpose() * delta;
  for (std::size_t l = hidden; l-- > 0;) {
    const Eigen::MatrixXd dz = upstream.cwiseProduct(cache.gates[l]);
    result.grads.weights[l].noalias() = dz * cache.inputs[l].transpose();
    result.grads.biases[l] = dz.rowwise().sum();
    if (l > 0) upstream = p.weights[l].transpose() * dz;
  }
  return result;
}

AdamState AdamState::for_model(const MlpModel& m) {
  return {m.params.zeros_like(), m.params.zeros_like()};
}

void adam_step(MlpModel& m, const Parameters& grads, AdamState& state, double lr) {
  if (!grads.same_shape(m.params) || !state.first_moment.same_shape(m.params) ||
      !state.second_moment.same_shape(m.params)) {
    throw std::invalid_argument("adam: parameter/gradient shape mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const auto update = [&](auto& param, const auto& g, auto& mom1, auto& mom2) {
    mom1 = state.beta1 * mom1 + (1.0 - state.beta1) * g;
    mom2 = state.beta2 * mom2 + (1.0 - state.beta2) * g.cwiseProduct(g);
    param.array() -= lr * (mom1.array() / bc1) / ((mom2.array() / bc2).sqrt() + state.eps);
  };
  for (std::size_t l = 0; l < m.params.weights.size(); ++l) {
    update(m.params.weights[l], grads.weights[l], state.first_moment.weights[l],
           state.second_moment.weights[l]);
    update(m.params.biases[l], grads.biases[l], state.first_moment.biases[l],
           state.second_moment.biases[l]);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr int kCheckpointVersion = 1;
static_assert(std::endian::native == std::endian::little, "checkpoint blob assumes little-endian");
}  // namespace

nlohmann::json to_json(const MlpSpec& spec) {
  return {{"input_dim", spec.input_dim},         {"hidden_layers", spec.hidden_layers},
          {"width", spec.width},                 {"activation", "relu"},
          {"dropout_rate", spec.dropout_rate},   {"output_dim", spec.output_dim},
          {"learning_rate", spec.learning_rate}};
}

MlpSpec mlp_spec_from_json(const nlohmann::json& j) {
  MlpSpec s;
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.hidden_layers = j.at("hidden_layers").get<std::size_t>();
  s.width = j.at("width").get<std::size_t>();
  if (j.at("activation") != "relu") throw std::invalid_argument("unsupported activation");
  s.dropout_rate = j.at("dropout_rate").get<double>();
  s.output_dim = j.at("output_dim").get<std::size_t>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.validate();
  return s;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto flat = ck.model.params.flatten();
  const nlohmann::json header = {{"format", "reveal-mlp-checkpoint"},
                                 {"version", kCheckpointVersion},
                                 {"spec", to_json(ck.model.spec)},
                                 {"seed", ck.seed},
                                 {"parameter_count", flat.size()},
                                 {"metadata", ck.metadata}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty checkpoint " + path.string());
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("format") != "reveal-mlp-checkpoint") throw IoError("not a checkpoint");
    if (!header.contains("version") || header.at("version").get<int>() != kCheckpointVersion) {
      throw IoError("unsupported checkpoint version in " + path.string());
    }
    Checkpoint ck;
    ck.model.spec = mlp_spec_from_json(header.at("spec"));
    ck.model.params = shaped_zero(ck.model.spec);
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.metadata = header.at("metadata");
    const auto count = header.at("parameter_count").get<std::size_t>();
    if (count != ck.model.params.count()) throw IoError("checkpoint parameter count mismatch");
    std::vector<double> flat(count);
    in.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)) || in.peek() != EOF) {
      throw IoError("truncated or oversized checkpoint blob in " + path.string());
    }
    ck.model.params.assign(flat);
    if (!ck.model.params.all_finite()) throw IoError("checkpoint holds non-finite parameters");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
}

}  // namespace reveal
