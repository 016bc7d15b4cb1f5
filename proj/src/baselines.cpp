#include "reveal/baselines.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "reveal/error.hpp"
#include "reveal/rng.hpp"

namespace reveal {

LogDistanceFit fit_log_distance(const ObservationSet& obs, const Point& tx_location, double reference_distance_m) {
  obs.validate();
  if (!(reference_distance_m > 0.0)) throw std::invalid_argument("reference distance must be positive");
  const std::size_t n = obs.size();
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = distance(obs.points[k], tx_location);
    if (d == 0.0) throw NumericError("observation at the transmitter location");
    x[k] = -10.0 * std::log10(d / reference_distance_m);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += obs.rssi_dbm[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (obs.rssi_dbm[k] - my);
  }
  const double scale = std::max(1.0, std::abs(mx));
  if (sxx <= 1e-18 * scale * scale * static_cast<double>(n)) {
    throw NumericError("all observations are equidistant from the transmitter");
  }
  const double eta = sxy / sxx;
  return {my - eta * mx, eta};
}

// ---------------------------------------------------------------------------

StatModel stat_model_from_string(const std::string& s) {
  if (s == "3gpp") return StatModel::gpp_38901;
  if (s == "itu") return StatModel::itu_imt2020;
  throw ConfigError("unknown statistical model: " + s + " (expected 3gpp or itu)");
}

std::string to_string(StatModel m) { return m == StatModel::gpp_38901 ? "3gpp" : "itu"; }

void StatModelParams::validate() const {
  if (!(carrier_ghz >= 0.5 && carrier_ghz <= 30.0)) throw ConfigError("carrier frequency outside 0.5-30 GHz");
  if (!(h_bs_m > 0.0) || !(h_ut_m > 0.0)) throw ConfigError("antenna heights must be positive");
  if (!(h_bs_m > h_ut_m)) throw ConfigError("base station must be above the user terminal");
  if (!(building_height_m > 0.0) || !(street_width_m > 0.0)) {
    throw ConfigError("building height and street width must be positive");
  }
  if (scenario != "RMa-LOS") throw ConfigError("only the RMa-LOS scenario is supported");
}

double rma_breakpoint_m(const StatModelParams& p) {
  constexpr double c = 3.0e8;
  return 2.0 * std::numbers::pi * p.h_bs_m * p.h_ut_m * p.carrier_ghz * 1e9 / c;
}

namespace {

double rma_pl1(const StatModelParams& p, double d) {
  const double h = p.building_height_m;
  const double hp = std::pow(h, 1.72);
  return 20.0 * std::log10(40.0 * std::numbers::pi * d * p.carrier_ghz / 3.0) +
         std::min(0.03 * hp, 10.0) * std::log10(d) - std::min(0.044 * hp, 14.77) +
         0.002 * std::log10(h) * d;
}

double rma_dual_slope(const StatModelParams& p, double d) {
  const double bp = rma_breakpoint_m(p);
  if (d <= bp) return rma_pl1(p, d);
  return rma_pl1(p, bp) + 40.0 * std::log10(d / bp);
}

double clamp_ground_distance(double d2d, bool& clamped) {
  if (!std::isfinite(d2d) || d2d < 0.0) throw std::invalid_argument("distance must be finite and non-negative");
  const double c = std::clamp(d2d, 10.0, 10.0e3);
  clamped = c != d2d;
  return c;
}

}  // namespace

PathLoss pl_3gpp_rma(const StatModelParams& p, double d2d_m) {
  p.validate();
  PathLoss out;
  const double d2 = clamp_ground_distance(d2d_m, out.clamped);
  const double dh = p.h_bs_m - p.h_ut_m;
  out.loss_db = rma_dual_slope(p, std::sqrt(d2 * d2 + dh * dh));
  return out;
}

PathLoss pl_itu_rma(const StatModelParams& p, double d2d_m) {
  p.validate();
  PathLoss out;
  out.loss_db = rma_dual_slope(p, clamp_ground_distance(d2d_m, out.clamped));
  return out;
}

PathLoss stat_model_loss(StatModel which, const StatModelParams& p, double d2d_m) {
  return which == StatModel::gpp_38901 ? pl_3gpp_rma(p, d2d_m) : pl_itu_rma(p, d2d_m);
}

std::vector<double> stat_model_rssi(StatModel which, const StatModelParams& p, const Transmitter& tx,
                                    std::span<const Point> points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& q : points) {
    out.push_back(tx.tx_power_dbm - stat_model_loss(which, p, distance(q, tx.location)).loss_db);
  }
  return out;
}

// ---------------------------------------------------------------------------

void Variogram::validate() const {
  if (model != "exponential") throw ConfigError("unsupported variogram model: " + model);
  if (!(nugget >= 0.0)) throw ConfigError("variogram nugget must be non-negative");
  if (!(sill >= nugget)) throw ConfigError("variogram sill must be at least the nugget");
  if (!(range_m > 0.0) || !std::isfinite(range_m)) throw ConfigError("variogram range must be positive");
}

double Variogram::operator()(double h) const {
  if (h <= 0.0) return 0.0;
  return nugget + (sill - nugget) * (1.0 - std::exp(-h / range_m));
}

std::vector<SemivariogramBin> empirical_semivariogram(const ObservationSet& obs, std::size_t bins) {
  obs.validate();
  if (bins == 0) throw std::invalid_argument("need at least one bin");
  double max_d = 0.0;
  for (std::size_t a = 0; a < obs.size(); ++a) {
    for (std::size_t b = a + 1; b < obs.size(); ++b) max_d = std::max(max_d, distance(obs.points[a], obs.points[b]));
  }
  const double cutoff = 0.5 * max_d;
  const double width = cutoff / static_cast<double>(bins);
  std::vector<SemivariogramBin> out(bins);
  std::vector<double> lag_sum(bins, 0.0);
  if (!(width > 0.0)) return {};
  for (std::size_t a = 0; a < obs.size(); ++a) {
    for (std::size_t b = a + 1; b < obs.size(); ++b) {
      const double d = distance(obs.points[a], obs.points[b]);
      if (d > cutoff) continue;
      const double cls = std::ceil(d / width) - 1.0;
      const auto k = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, cls)));
      const double diff = obs.rssi_dbm[a] - obs.rssi_dbm[b];
      out[k].gamma += 0.5 * diff * diff;
      lag_sum[k] += d;
      ++out[k].pairs;
    }
  }
  std::vector<SemivariogramBin> filled;
  for (std::size_t k = 0; k < bins; ++k) {
    if (out[k].pairs == 0) continue;
    const auto n = static_cast<double>(out[k].pairs);
    filled.push_back({lag_sum[k] / n, out[k].gamma / n, out[k].pairs});
  }
  return filled;
}

namespace {

struct LinearFit {
  double nugget;
  double partial;
  double wss;
};

// Weighted least squares of gamma ~ nugget + partial * g with both
// coefficients kept non-negative.
LinearFit fit_for_range(const std::vector<SemivariogramBin>& bins, double range) {
  double sw = 0.0;
  double sg = 0.0;
  double sy = 0.0;
  double sgg = 0.0;
  double sgy = 0.0;
  for (const auto& b : bins) {
    const double w = static_cast<double>(b.pairs);
    const double g = 1.0 - std::exp(-b.lag / range);
    sw += w;
    sg += w * g;
    sy += w * b.gamma;
    sgg += w * g * g;
    sgy += w * g * b.gamma;
  }
  const auto wss = [&](double c0, double c1) {
    double s = 0.0;
    for (const auto& b : bins) {
      const double r = b.gamma - c0 - c1 * (1.0 - std::exp(-b.lag / range));
      s += static_cast<double>(b.pairs) * r * r;
    }
    return s;
  };
  const double det = sw * sgg - sg * sg;
  double c0 = 0.0;
  double c1 = 0.0;
  if (det > 1e-12 * sw * sgg) {
    c0 = (sgg * sy - sg * sgy) / det;
    c1 = (sw * sgy - sg * sy) / det;
  }
  if (det <= 1e-12 * sw * sgg || c0 < 0.0 || c1 < 0.0) {
    // Best of the two boundary fits.
    const double only_partial = sgg > 0.0 ? std::max(0.0, sgy / sgg) : 0.0;
    const double only_nugget = std::max(0.0, sy / sw);
    const double e1 = wss(0.0, only_partial);
    const double e2 = wss(only_nugget, 0.0);
    return e1 <= e2 ? LinearFit{0.0, only_partial, e1} : LinearFit{only_nugget, 0.0, e2};
  }
  return {c0, c1, wss(c0, c1)};
}

}  // namespace

Variogram fit_variogram(const ObservationSet& obs, std::size_t bins) {
  obs.validate();
  if (obs.size() < 10) throw NumericError("variogram fit needs at least 10 observations");
  const auto emp = empirical_semivariogram(obs, bins);
  if (emp.size() < 3) throw NumericError("variogram fit needs at least 3 non-empty bins");

  const double lo = emp.front().lag / 4.0;
  const double hi = emp.back().lag;
  // Log-spaced scan of the range, then golden-section refinement.
  constexpr int scan = 200;
  double best_r = lo;
  double best_e = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= scan; ++s) {
    const double r = lo * std::pow(hi / lo, static_cast<double>(s) / scan);
    const double e = fit_for_range(emp, r).wss;
    if (e < best_e) {
      best_e = e;
      best_r = r;
    }
  }
  const double step = std::pow(hi / lo, 1.0 / scan);
  double a = std::log(std::max(lo, best_r / step));
  double b = std::log(std::min(hi, best_r * step));
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double c = b - phi * (b - a);
    const double d = a + phi * (b - a);
    if (fit_for_range(emp, std::exp(c)).wss <= fit_for_range(emp, std::exp(d)).wss) {
      b = d;
    } else {
      a = c;
    }
  }
  double r = std::exp(0.5 * (a + b));
  if (fit_for_range(emp, r).wss > best_e) r = best_r;
  const LinearFit f = fit_for_range(emp, r);
  Variogram v{"exponential", f.nugget, f.nugget + f.partial, r};
  v.validate();
  return v;
}

OrdinaryKriging::OrdinaryKriging(ObservationSet obs, Variogram v) : obs_(std::move(obs)), v_(std::move(v)) {
  obs_.validate();
  v_.validate();
  const auto n = static_cast<Eigen::Index>(obs_.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      a(i, j) = a(j, i) = v_(distance(obs_.points[static_cast<std::size_t>(i)], obs_.points[static_cast<std::size_t>(j)]));
    }
    a(i, n) = a(n, i) = 1.0;
  }
  lu_.compute(a);
  if (!lu_.isInvertible()) throw NumericError("singular kriging system");
}

KrigingEstimate OrdinaryKriging::predict(const Point& p) const {
  const auto n = static_cast<Eigen::Index>(obs_.size());
  Eigen::VectorXd rhs(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) rhs(i) = v_(distance(obs_.points[static_cast<std::size_t>(i)], p));
  rhs(n) = 1.0;
  const Eigen::VectorXd sol = lu_.solve(rhs);
  KrigingEstimate est;
  est.weights.assign(sol.data(), sol.data() + n);
  for (Eigen::Index i = 0; i < n; ++i) est.mean += sol(i) * obs_.rssi_dbm[static_cast<std::size_t>(i)];
  est.variance = std::max(0.0, sol.head(n).dot(rhs.head(n)) + sol(n));
  if (!std::isfinite(est.mean)) throw NumericError("non-finite kriging estimate");
  return est;
}

std::vector<double> OrdinaryKriging::predict_mean(std::span<const Point> points) const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(predict(p).mean);
  return out;
}

KrigingEstimate kriging_predict(const ObservationSet& obs, const Variogram& v, const Point& p) {
  return OrdinaryKriging(obs, v).predict(p);
}

// ---------------------------------------------------------------------------

TrainResult train_fcnn(const Grid& frame, const ObservationSet& train_obs, const ObservationSet& val_obs,
                       const MlpSpec& spec, LossConfig cfg, std::uint64_t seed) {
  cfg.lambda = 0.0;
  return train_reveal(frame, train_obs, val_obs, spec, cfg, seed);
}

TrainResult train_pinn_statmodel(const Grid& frame, const ObservationSet& train_obs, const ObservationSet& val_obs,
                                 StatModel which, const StatModelParams& params, const Transmitter& tx,
                                 const MlpSpec& spec, const LossConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  params.validate();
  const TrainingSet set = make_training_set(frame, train_obs, val_obs);
  SurfacePrior prior;
  for (double v : stat_model_rssi(which, params, tx, train_obs.points)) prior.values.push_back(set.scaling.to_model(v));
  return train(init(spec, derive_seed(seed, stream::init)), set, prior, cfg, seed);
}

}  // namespace reveal
