#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "reveal/grid.hpp"

namespace reveal {

/// Single transmitter of the log-distance model.
struct Transmitter {
  Point location;
  double tx_power_dbm = 43.0;
  double path_loss_exponent = 3.2;
  double reference_distance_m = 1.0;

  /// Throws std::invalid_argument when d0 <= 0 or the exponent leaves [1.5, 6].
  void validate() const;
};

struct PathLossRssi {
  double rssi_dbm = 0.0;
  bool clamped = false;  ///< distance was raised to the minimum distance
};

/// Deterministic part of the received power: P_T - 10 eta log10(d / d0).
/// Distances below `min_distance_m` are clamped (and flagged); a point exactly
/// on the transmitter throws NumericError("transmitter singularity").
PathLossRssi path_loss_rssi(const Transmitter& tx, const Point& p, double min_distance_m);

/// Same model as a function of distance only; no clamping.
double log_distance_rssi(const Transmitter& tx, double distance_m);

enum class ShadowMethod { circulant, cholesky };

/// Zero-mean Gaussian shadowing with covariance sigma^2 exp(-d / corr_len).
struct ShadowField {
  Grid grid;
  std::vector<double> values;  ///< dB, row-major (i * cols + j)
  double sigma_db = 0.0;
  double correlation_length_m = 1.0;
  std::uint64_t seed = 0;
  ShadowMethod method = ShadowMethod::circulant;

  double at(std::size_t i, std::size_t j) const { return values[grid.flat_index(i, j)]; }
};

/// Circulant embedding (default) is exact whenever every eigenvalue of the
/// embedded covariance is non-negative; the padding grows until that holds.
/// Cholesky factors the dense covariance and is limited to small grids.
ShadowField gen_shadow_field(const Grid& grid, double sigma_db, double corr_len_m,
                             std::uint64_t seed, ShadowMethod method = ShadowMethod::circulant);

/// Constant-valued field, handy for tests and for zero-shadow scenes.
ShadowField constant_shadow(const Grid& grid, double value_db);

struct Scene {
  Grid grid;
  Transmitter tx;
  ShadowField shadow;
  std::vector<double> truth;  ///< RSSI dBm per cell, row-major
  double min_distance_m = 0.0;

  double truth_at(std::size_t i, std::size_t j) const { return truth[grid.flat_index(i, j)]; }
  /// Bilinear interpolation between cell centers; constant beyond the outer centers.
  double interpolate(const Point& p) const;
};

/// truth(i, j) = path_loss_rssi(tx, center(i, j)) + shadow(i, j).
/// `min_distance_m` <= 0 selects one cell pitch.
Scene build_scene(const Grid& grid, const Transmitter& tx, const ShadowField& shadow,
                  double min_distance_m = 0.0);

/// Sparse sensor readings for one channel.
struct ObservationSet {
  std::vector<Point> points;
  std::vector<double> rssi_dbm;
  std::string channel = "C0";

  std::size_t size() const { return points.size(); }
  /// Equal lengths, at least one point, finite values, no duplicate points.
  void validate() const;
};

/// Reads the scene at `points` with additive i.i.d. N(0, noise_sigma^2) noise.
ObservationSet observe(const Scene& scene, const std::vector<Point>& points, double noise_sigma_db,
                       std::uint64_t seed, std::string channel = "C0");

/// Discrete 5-point Laplacian of the truth layer in dB/m^2 at interior cells;
/// NaN on the border.
std::vector<double> truth_laplacian(const Scene& scene);

// Scene files: JSON header (grid, transmitter, shadow parameters, seed) plus a
// CSV of truth cells `i,j,rssi_dbm`. The shadow layer is regenerated from the
// header on load.
void write_scene(const Scene& scene, const std::filesystem::path& json_path,
                 const std::filesystem::path& csv_path);
Scene read_scene(const std::filesystem::path& json_path);

nlohmann::json to_json(const Grid& g);
Grid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Transmitter& tx);
Transmitter transmitter_from_json(const nlohmann::json& j);

/// Observations CSV `x_m,y_m,rssi_dbm,channel`, one channel per file.
void write_observations(const ObservationSet& obs, const std::filesystem::path& path);
ObservationSet read_observations(const std::filesystem::path& path);

}  // namespace reveal
