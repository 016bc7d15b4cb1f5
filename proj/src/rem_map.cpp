#include "reveal/rem_map.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "reveal/error.hpp"
#include "reveal/scene.hpp"

namespace reveal {

void RemMap::validate() const {
  if (values.size() != grid.cell_count()) throw std::invalid_argument("REM size does not match grid");
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("REM holds non-finite values");
  }
  if (abs_error && abs_error->size() != values.size()) {
    throw std::invalid_argument("REM error layer size mismatch");
  }
}

void RemMap::attach_truth(const Scene& scene) {
  if (!(scene.grid == grid)) throw std::invalid_argument("REM and scene grids differ");
  std::vector<double> err(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) err[k] = std::abs(values[k] - scene.truth[k]);
  abs_error = std::move(err);
}

void write_rem_csv(const RemMap& map, const std::filesystem::path& path) {
  map.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (map.abs_error ? "i,j,x_m,y_m,rssi_dbm,abs_err_db\n" : "i,j,x_m,y_m,rssi_dbm\n");
  for (std::size_t i = 0; i < map.grid.rows(); ++i) {
    for (std::size_t j = 0; j < map.grid.cols(); ++j) {
      const auto c = map.grid.cell_center(i, j);
      const auto k = map.grid.flat_index(i, j);
      out << fmt::format("{},{},{},{},{}", i, j, c.x, c.y, map.values[k]);
      if (map.abs_error) out << fmt::format(",{}", (*map.abs_error)[k]);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

RemMap read_rem_csv(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  const bool with_error = line == "i,j,x_m,y_m,rssi_dbm,abs_err_db";
  if (!with_error && line != "i,j,x_m,y_m,rssi_dbm") throw IoError("unexpected REM CSV header in " + path.string());

  RemMap map{grid, std::vector<double>(grid.cell_count(), std::nan("")), std::nullopt};
  if (with_error) map.abs_error = std::vector<double>(grid.cell_count(), std::nan(""));
  std::vector<bool> seen(grid.cell_count(), false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    std::size_t i = 0;
    std::size_t j = 0;
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;
    double e = 0.0;
    if (!(row >> i >> j >> x >> y >> v) || (with_error && !(row >> e)) || i >= grid.rows() ||
        j >= grid.cols()) {
      throw IoError(fmt::format("{}:{}: malformed REM row", path.string(), line_no));
    }
    const Point c = grid.cell_center(i, j);
    const double tol = 1e-6 * grid.pitch();
    if (std::abs(c.x - x) > tol || std::abs(c.y - y) > tol) {
      throw ConfigError(fmt::format("{}:{}: REM grid does not match the reference grid", path.string(), line_no));
    }
    const auto k = grid.flat_index(i, j);
    map.values[k] = v;
    if (with_error) (*map.abs_error)[k] = e;
    seen[k] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw IoError("REM CSV does not cover the grid: " + path.string());
  }
  map.validate();
  return map;
}

void write_rem_pgm(const RemMap& map, const std::filesystem::path& path, std::optional<double> lo_dbm,
                   std::optional<double> hi_dbm) {
  map.validate();
  const auto [mn, mx] = std::minmax_element(map.values.begin(), map.values.end());
  const double lo = lo_dbm.value_or(*mn);
  const double hi = hi_dbm.value_or(*mx);
  if (!(hi >= lo)) throw std::invalid_argument("PGM range is inverted");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P2\n";
  out << fmt::format("# rssi_dbm_min={} rssi_dbm_max={}\n", lo, hi);
  out << map.grid.cols() << ' ' << map.grid.rows() << "\n255\n";
  for (std::size_t r = 0; r < map.grid.rows(); ++r) {
    const std::size_t i = map.grid.rows() - 1 - r;
    for (std::size_t j = 0; j < map.grid.cols(); ++j) {
      const double t = hi > lo ? (map.at(i, j) - lo) / (hi - lo) : 0.0;
      const long level = std::lround(255.0 * std::clamp(t, 0.0, 1.0));
      out << level << (j + 1 == map.grid.cols() ? '\n' : ' ');
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace reveal
