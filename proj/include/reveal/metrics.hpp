#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace reveal {

double rmse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);
/// 1 - SS_res / SS_tot. Throws when the truth has zero variance.
double r_squared(std::span<const double> pred, std::span<const double> truth);

/// Percentile by linear interpolation between order statistics, q in [0, 1].
double percentile(std::vector<double> values, double q);

struct EcdfStep {
  double value;
  double cumulative;  ///< fraction of samples <= value
};

struct Ecdf {
  std::vector<EcdfStep> steps;  ///< right-continuous, one step per distinct value
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;

  /// F(x): fraction of samples <= x.
  double operator()(double x) const;
};

Ecdf ecdf(std::span<const double> abs_errors);

struct EvalReport {
  double rmse = 0.0;
  double mae = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
  /// (percent, |error| dB) pairs, percent ascending.
  std::vector<std::pair<double, double>> abs_error_percentiles;
  std::optional<double> wall_time_s;
};

EvalReport evaluate(std::span<const double> pred, std::span<const double> truth);

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);
/// Header row and value row for table assembly.
std::string eval_report_csv(const EvalReport& r, const std::string& label);

}  // namespace reveal
