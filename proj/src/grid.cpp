#include "reveal/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace reveal {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Grid::Grid(double x_min, double x_max, double y_min, double y_max, std::size_t rows,
           std::size_t cols)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max), rows_(rows), cols_(cols) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) ||
      !std::isfinite(y_max)) {
    throw std::invalid_argument("grid extent must be finite");
  }
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw std::invalid_argument("grid extent is degenerate");
  }
  if (rows < 2 || cols < 2) {
    throw std::invalid_argument("grid needs at least 2 rows and 2 cols");
  }
}

double Grid::pitch() const { return std::max(pitch_x(), pitch_y()); }

Point Grid::cell_center(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) {
    throw std::out_of_range("cell (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") outside " + std::to_string(rows_) + "x" +
                            std::to_string(cols_) + " grid");
  }
  return {x_min_ + (static_cast<double>(j) + 0.5) * pitch_x(),
          y_min_ + (static_cast<double>(i) + 0.5) * pitch_y()};
}

std::vector<Point> Grid::cell_centers() const {
  std::vector<Point> out;
  out.reserve(cell_count());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out.push_back(cell_center(i, j));
  }
  return out;
}

UnitPoint Grid::normalize(const Point& p) const {
  return {(p.x - x_min_) / (x_max_ - x_min_), (p.y - y_min_) / (y_max_ - y_min_)};
}

Point Grid::denormalize(const UnitPoint& q) const {
  return {x_min_ + q.u * (x_max_ - x_min_), y_min_ + q.v * (y_max_ - y_min_)};
}

bool Grid::contains(const Point& p) const {
  return p.x >= x_min_ && p.x <= x_max_ && p.y >= y_min_ && p.y <= y_max_;
}

double bilinear(const Grid& g, std::span<const double> values, const Point& p) {
  if (values.size() != g.cell_count()) throw std::invalid_argument("value layer does not match grid");
  const auto axis = [](double coord, double lo, double pitch, std::size_t count) {
    double f = (coord - lo) / pitch - 0.5;
    f = std::clamp(f, 0.0, static_cast<double>(count - 1));
    auto k0 = static_cast<std::size_t>(std::floor(f));
    k0 = std::min(k0, count - 2);
    return std::pair{k0, f - static_cast<double>(k0)};
  };
  const auto [j0, tx] = axis(p.x, g.x_min(), g.pitch_x(), g.cols());
  const auto [i0, ty] = axis(p.y, g.y_min(), g.pitch_y(), g.rows());
  const double f00 = values[g.flat_index(i0, j0)];
  const double f01 = values[g.flat_index(i0, j0 + 1)];
  const double f10 = values[g.flat_index(i0 + 1, j0)];
  const double f11 = values[g.flat_index(i0 + 1, j0 + 1)];
  return (1.0 - ty) * ((1.0 - tx) * f00 + tx * f01) + ty * ((1.0 - tx) * f10 + tx * f11);
}

}  // namespace reveal
