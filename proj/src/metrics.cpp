#include "reveal/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reveal {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("prediction/truth length mismatch");
  if (pred.empty()) throw std::invalid_argument("empty prediction vector");
}

constexpr double kPercentiles[] = {5, 10, 25, 50, 75, 90, 95, 99};

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double ss = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) ss += (pred[k] - truth[k]) * (pred[k] - truth[k]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double s = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) s += std::abs(pred[k] - truth[k]);
  return s / static_cast<double>(pred.size());
}

double r_squared(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    ss_tot += (truth[k] - mean) * (truth[k] - mean);
    ss_res += (pred[k] - truth[k]) * (pred[k] - truth[k]);
  }
  if (ss_tot == 0.0) throw std::invalid_argument("truth has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile rank outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return values[lo] + t * (values[hi] - values[lo]);
}

double Ecdf::operator()(double x) const {
  double f = 0.0;
  for (const auto& s : steps) {
    if (s.value <= x) f = s.cumulative;
  }
  return f;
}

Ecdf ecdf(std::span<const double> abs_errors) {
  if (abs_errors.empty()) throw std::invalid_argument("ecdf of empty set");
  std::vector<double> v(abs_errors.begin(), abs_errors.end());
  std::sort(v.begin(), v.end());
  Ecdf out;
  const double n = static_cast<double>(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k + 1 < v.size() && v[k + 1] == v[k]) continue;
    out.steps.push_back({v[k], static_cast<double>(k + 1) / n});
  }
  out.p25 = percentile(v, 0.25);
  out.p50 = percentile(v, 0.50);
  out.p75 = percentile(v, 0.75);
  return out;
}

EvalReport evaluate(std::span<const double> pred, std::span<const double> truth) {
  EvalReport r;
  r.rmse = rmse(pred, truth);
  r.mae = mae(pred, truth);
  r.r_squared = r_squared(pred, truth);
  r.n_points = pred.size();
  std::vector<double> abs_err(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) abs_err[k] = std::abs(pred[k] - truth[k]);
  std::sort(abs_err.begin(), abs_err.end());
  for (double pct : kPercentiles) r.abs_error_percentiles.emplace_back(pct, percentile(abs_err, pct / 100.0));
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json pct = nlohmann::json::array();
  for (const auto& [p, v] : r.abs_error_percentiles) pct.push_back({{"percent", p}, {"abs_error_db", v}});
  nlohmann::json j = {{"rmse_db", r.rmse},
                      {"mae_db", r.mae},
                      {"r_squared", r.r_squared},
                      {"n_points", r.n_points},
                      {"abs_error_percentiles", pct}};
  j["wall_time_s"] = r.wall_time_s ? nlohmann::json(*r.wall_time_s) : nlohmann::json(nullptr);
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.rmse = j.at("rmse_db").get<double>();
  r.mae = j.at("mae_db").get<double>();
  r.r_squared = j.at("r_squared").get<double>();
  r.n_points = j.at("n_points").get<std::size_t>();
  for (const auto& p : j.at("abs_error_percentiles")) {
    r.abs_error_percentiles.emplace_back(p.at("percent").get<double>(), p.at("abs_error_db").get<double>());
  }
  if (j.contains("wall_time_s") && !j.at("wall_time_s").is_null()) r.wall_time_s = j.at("wall_time_s").get<double>();
  return r;
}

std::string eval_report_csv(const EvalReport& r, const std::string& label) {
  std::string out = "label,rmse_db,mae_db,r_squared,n_points,p25_db,p50_db,p75_db,wall_time_s\n";
  const auto pct = [&](double p) {
    for (const auto& [k, v] : r.abs_error_percentiles) {
      if (k == p) return v;
    }
    return std::nan("");
  };
  out += fmt::format("{},{},{},{},{},{},{},{},{}\n", label, r.rmse, r.mae, r.r_squared, r.n_points,
                     pct(25), pct(50), pct(75), r.wall_time_s ? fmt::format("{}", *r.wall_time_s) : "");
  return out;
}

}  // namespace reveal
