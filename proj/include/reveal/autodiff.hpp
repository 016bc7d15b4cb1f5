#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace reveal::ad {

class Tape;

/// Handle to a scalar recorded on a Tape. Cheap to copy; only valid while
/// the owning tape is alive.
class Var {
 public:
  Var() = default;

  double value() const;
  std::size_t index() const { return index_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Wengert list for scalar reverse-mode differentiation. Each node stores
/// its value and the local partials towards at most two parents.
class Tape {
 public:
  Var variable(double value);

  /// Adjoints d(out)/d(node) for every node recorded so far.
  std::vector<double> gradient(const Var& out) const;

  std::size_t size() const { return nodes_.size(); }
  double value(std::size_t index) const { return nodes_[index].value; }

  // Used by the operator overloads.
  Var unary(double value, const Var& a, double da);
  Var binary(double value, const Var& a, double da, const Var& b, double db);

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Node {
    double value;
    std::size_t lhs;
    std::size_t rhs;
    double dlhs;
    double drhs;
  };

  std::vector<Node> nodes_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, double b);

Var square(const Var& a);
Var sqrt(const Var& a);
Var sum(std::span<const Var> terms);
Var mean(std::span<const Var> terms);

}  // namespace reveal::ad
