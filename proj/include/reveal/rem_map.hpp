#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "reveal/grid.hpp"

namespace reveal {

struct Scene;

/// Predicted RSSI over every cell of a grid, optionally with |error| vs truth.
struct RemMap {
  Grid grid;
  std::vector<double> values;  ///< dBm, row-major
  std::optional<std::vector<double>> abs_error;

  double at(std::size_t i, std::size_t j) const { return values[grid.flat_index(i, j)]; }
  double interpolate(const Point& p) const { return bilinear(grid, values, p); }
  /// Dimensions match the grid and every value is finite.
  void validate() const;
  /// Fills abs_error from a scene on the same grid.
  void attach_truth(const Scene& scene);
};

/// Header `i,j,x_m,y_m,rssi_dbm[,abs_err_db]`.
void write_rem_csv(const RemMap& map, const std::filesystem::path& path);
/// Needs the grid because the CSV does not carry the extent.
RemMap read_rem_csv(const std::filesystem::path& path, const Grid& grid);

/// Plain (P2) PGM, J columns x I rows, north up (row I-1 first). Gray level
/// 0..255 maps linearly from lo_dbm to hi_dbm; both bounds are written in a
/// header comment. Defaults to the map's own min/max.
void write_rem_pgm(const RemMap& map, const std::filesystem::path& path,
                   std::optional<double> lo_dbm = std::nullopt,
                   std::optional<double> hi_dbm = std::nullopt);

}  // namespace reveal
