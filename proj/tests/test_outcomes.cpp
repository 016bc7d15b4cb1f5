// End-to-end behavior of the trained methods on the default synthetic scene.

#include <doctest.h>

#include <cmath>

#include "reveal/experiment.hpp"
#include "reveal/metrics.hpp"
#include "reveal/physics.hpp"
#include "reveal/rng.hpp"

using namespace reveal;

namespace {

RemMap train_and_map(const ExperimentConfig& c, const Scenario& s, double lambda, std::uint64_t seed) {
  auto cfg = c.training;
  cfg.lambda = lambda;
  return predict_rem(train_reveal(c.grid, s.train, s.val, c.model, cfg, seed).model, c.grid);
}

double nearest_cell(const Grid& g, const RemMap& map, const Point& p) {
  const auto i = static_cast<std::size_t>((p.y - g.y_min()) / g.pitch_y());
  const auto j = static_cast<std::size_t>((p.x - g.x_min()) / g.pitch_x());
  return map.at(i, j);
}

}  // namespace

TEST_CASE("trained map reproduces the training data at the nearest cell") {
  const ExperimentConfig c;
  const auto s = make_scenario(c, 1, c.train_size);
  const auto map = train_and_map(c, s, c.training.lambda, 1);
  std::size_t within = 0;
  for (std::size_t n = 0; n < s.train.size(); ++n) {
    if (std::abs(nearest_cell(c.grid, map, s.train.points[n]) - s.train.rssi_dbm[n]) <= 3.0) ++within;
  }
  MESSAGE("training points within 3 dB: " << within << " / " << s.train.size());
  CHECK(within * 10 >= s.train.size() * 8);
}

TEST_CASE("lambda one fits the training data far worse") {
  const ExperimentConfig c;
  const auto s = make_scenario(c, 1, c.train_size);
  const auto error = [&](double lambda) {
    auto cfg = c.training;
    cfg.lambda = lambda;
    const auto r = train_reveal(c.grid, s.train, s.val, c.model, cfg, 1);
    return rmse(r.model.predict(s.train.points), s.train.rssi_dbm);
  };
  const double e9 = error(0.9);
  const double e1 = error(1.0);
  MESSAGE("training RMSE lambda 0.9: " << e9 << " dB, lambda 1: " << e1 << " dB");
  CHECK(e1 >= 2.0 * e9);
}

TEST_CASE("physics loss beats the plain network on held-out cells") {
  const ExperimentConfig c;
  std::size_t wins = 0;
  for (std::uint64_t seed : c.seeds) {
    const auto s = make_scenario(c, seed, c.train_size);
    const double rv = run_method(c, s, "reveal", seed, 0.9).test.rmse;
    const double fc = run_method(c, s, "fcnn", seed).test.rmse;
    MESSAGE("seed " << seed << ": reveal " << rv << " dB, fcnn " << fc << " dB");
    if (rv < fc) ++wins;
  }
  CHECK(wins >= 4);
}

TEST_CASE("physics loss flattens the network on a shadow-free scene") {
  ExperimentConfig c;
  c.shadow.sigma_db = 0.0;
  const double h = default_stencil_step(c.grid);
  std::size_t wins = 0;
  for (std::uint64_t seed : c.seeds) {
    const auto s = make_scenario(c, seed, c.train_size);
    const auto mean_abs_laplacian = [&](double lambda) {
      auto cfg = c.training;
      cfg.lambda = lambda;
      const auto r = train_reveal(c.grid, s.train, s.val, c.model, cfg, seed);
      double acc = 0.0;
      for (const auto& p : s.train.points) acc += std::abs(fd_laplacian(r.model.net, c.grid.normalize(p), h).value);
      return acc / static_cast<double>(s.train.size());
    };
    const double l9 = mean_abs_laplacian(0.9);
    const double l0 = mean_abs_laplacian(0.0);
    MESSAGE("seed " << seed << ": mean |laplacian| lambda 0.9 " << l9 << ", lambda 0 " << l0);
    if (l9 < l0) ++wins;
  }
  CHECK(wins >= 4);
}

TEST_CASE("blind physics loss beats the statistical-model priors") {
  const ExperimentConfig c;
  std::vector<double> rv, g, it;
  for (std::uint64_t seed : c.seeds) {
    const auto s = make_scenario(c, seed, c.train_size);
    rv.push_back(run_method(c, s, "reveal", seed, 0.9).test.rmse);
    g.push_back(run_method(c, s, "pinn3gpp", seed, 0.9).test.rmse);
    it.push_back(run_method(c, s, "pinnitu", seed, 0.9).test.rmse);
  }
  MESSAGE("median RMSE reveal " << median(rv) << ", pinn3gpp " << median(g) << ", pinnitu " << median(it));
  CHECK(median(rv) < median(g));
  CHECK(median(rv) < median(it));
}

TEST_CASE("true generative model as the prior on a shadow-free scene") {
  ExperimentConfig z;
  z.shadow.sigma_db = 0.0;
  const auto s = make_scenario(z, 6, z.train_size);
  const auto set = make_training_set(z.grid, s.train, s.val);
  SurfacePrior prior;
  for (const auto& p : s.train.points) {
    prior.values.push_back(set.scaling.to_model(path_loss_rssi(z.tx, p, z.grid.pitch()).rssi_dbm));
  }
  const auto r = train(init(z.model, derive_seed(6, stream::init)), set, prior, z.training, 6);
  const double e = rmse(r.model.predict(s.test_points), s.test_truth);
  MESSAGE("shadow-free RMSE with the generative prior: " << e);
  CHECK(e < 1.0);
}
