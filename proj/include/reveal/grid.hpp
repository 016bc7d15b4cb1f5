#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace reveal {

/// Location in the metric domain frame (meters).
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Location in the unit-square frame the networks train on.
struct UnitPoint {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const UnitPoint&, const UnitPoint&) = default;
};

double distance(const Point& a, const Point& b);

/// Rectangular domain split into rows x cols equally sized cells.
/// Row index i runs along y, column index j along x.
class Grid {
 public:
  Grid(double x_min, double x_max, double y_min, double y_max, std::size_t rows,
       std::size_t cols);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t cell_count() const { return rows_ * cols_; }

  double pitch_x() const { return (x_max_ - x_min_) / static_cast<double>(cols_); }
  double pitch_y() const { return (y_max_ - y_min_) / static_cast<double>(rows_); }
  /// Larger of the two pitches; used as the default clamp distance.
  double pitch() const;

  std::size_t flat_index(std::size_t i, std::size_t j) const { return i * cols_ + j; }

  Point cell_center(std::size_t i, std::size_t j) const;
  std::vector<Point> cell_centers() const;

  UnitPoint normalize(const Point& p) const;
  Point denormalize(const UnitPoint& q) const;

  bool contains(const Point& p) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  double x_min_;
  double x_max_;
  double y_min_;
  double y_max_;
  std::size_t rows_;
  std::size_t cols_;
};

/// Bilinear interpolation of a per-cell layer between cell centers; constant
/// beyond the outer centers.
double bilinear(const Grid& g, std::span<const double> values, const Point& p);

}  // namespace reveal
