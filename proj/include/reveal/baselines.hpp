#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reveal/grid.hpp"
#include "reveal/mlp.hpp"
#include "reveal/physics.hpp"
#include "reveal/scene.hpp"

namespace reveal {

// ---------------------------------------------------------------------------
// Log-distance calibration

struct LogDistanceFit {
  double tx_power_dbm = 0.0;
  double path_loss_exponent = 0.0;
};

/// OLS of rssi against -10 log10(d / d0). Throws NumericError when every
/// point sits at the same distance.
LogDistanceFit fit_log_distance(const ObservationSet& obs, const Point& tx_location,
                                double reference_distance_m = 1.0);

// ---------------------------------------------------------------------------
// Rural macro LOS path loss

enum class StatModel { gpp_38901, itu_imt2020 };

StatModel stat_model_from_string(const std::string& s);
std::string to_string(StatModel m);

struct StatModelParams {
  double carrier_ghz = 0.6;
  double h_bs_m = 25.0;
  double h_ut_m = 1.5;
  double building_height_m = 5.0;
  double street_width_m = 20.0;
  std::string scenario = "RMa-LOS";

  void validate() const;
};

struct PathLoss {
  double loss_db = 0.0;
  bool clamped = false;  ///< d_2D was moved into [10 m, 10 km]
};

/// Breakpoint distance 2 pi h_BS h_UT f_c / c, meters.
double rma_breakpoint_m(const StatModelParams& p);

/// Dual slope with PL1 on the 3D distance below the breakpoint and
/// PL1(d_BP) + 40 log10(d_3D / d_BP) above it.
PathLoss pl_3gpp_rma(const StatModelParams& p, double d2d_m);

/// Same dual slope evaluated on the ground distance d_2D throughout.
PathLoss pl_itu_rma(const StatModelParams& p, double d2d_m);

PathLoss stat_model_loss(StatModel which, const StatModelParams& p, double d2d_m);

/// P_T - PL at every point.
std::vector<double> stat_model_rssi(StatModel which, const StatModelParams& p, const Transmitter& tx,
                                    std::span<const Point> points);

// ---------------------------------------------------------------------------
// Ordinary Kriging

struct Variogram {
  std::string model = "exponential";
  double nugget = 0.0;
  double sill = 0.0;
  double range_m = 1.0;

  void validate() const;
  /// Semivariance at lag h; 0 at h = 0 so the predictor interpolates.
  double operator()(double h) const;
};

struct SemivariogramBin {
  double lag = 0.0;
  double gamma = 0.0;
  std::size_t pairs = 0;
};

/// Equal-width bins up to half the largest pairwise distance.
std::vector<SemivariogramBin> empirical_semivariogram(const ObservationSet& obs, std::size_t bins = 12);

/// Pair-count weighted least squares fit of the exponential model.
/// Needs at least 10 points and 3 non-empty bins.
Variogram fit_variogram(const ObservationSet& obs, std::size_t bins = 12);

struct KrigingEstimate {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> weights;
};

/// Factorizes the bordered variogram system once and answers many queries.
class OrdinaryKriging {
 public:
  /// Throws NumericError when the system is singular (e.g. duplicate points).
  OrdinaryKriging(ObservationSet obs, Variogram v);

  KrigingEstimate predict(const Point& p) const;
  std::vector<double> predict_mean(std::span<const Point> points) const;

  const Variogram& variogram() const { return v_; }

 private:
  ObservationSet obs_;
  Variogram v_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
};

KrigingEstimate kriging_predict(const ObservationSet& obs, const Variogram& v, const Point& p);

// ---------------------------------------------------------------------------
// Neural baselines

/// Plain network: the ReVeal trainer with lambda forced to 0.
TrainResult train_fcnn(const Grid& frame, const ObservationSet& train_obs, const ObservationSet& val_obs,
                       const MlpSpec& spec, LossConfig cfg, std::uint64_t seed);

/// Physics term replaced by the MSE to the statistical model's RSSI at the
/// training points.
TrainResult train_pinn_statmodel(const Grid& frame, const ObservationSet& train_obs,
                                 const ObservationSet& val_obs, StatModel which,
                                 const StatModelParams& params, const Transmitter& tx, const MlpSpec& spec,
                                 const LossConfig& cfg, std::uint64_t seed);

}  // namespace reveal
