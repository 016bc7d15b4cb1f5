#include "reveal/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace reveal::ad {

double Var::value() const { return tape_->value(index_); }

Var Tape::variable(double value) {
  nodes_.push_back({value, kNone, kNone, 0.0, 0.0});
  return {this, nodes_.size() - 1};
}

Var Tape::unary(double value, const Var& a, double da) {
  nodes_.push_back({value, a.index(), kNone, da, 0.0});
  return {this, nodes_.size() - 1};
}

Var Tape::binary(double value, const Var& a, double da, const Var& b, double db) {
  nodes_.push_back({value, a.index(), b.index(), da, db});
  return {this, nodes_.size() - 1};
}

std::vector<double> Tape::gradient(const Var& out) const {
  if (out.tape() != this) throw std::invalid_argument("variable belongs to another tape");
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[out.index()] = 1.0;
  for (std::size_t k = out.index() + 1; k-- > 0;) {
    const Node& n = nodes_[k];
    if (adj[k] == 0.0) continue;
    if (n.lhs != kNone) adj[n.lhs] += n.dlhs * adj[k];
    if (n.rhs != kNone) adj[n.rhs] += n.drhs * adj[k];
  }
  return adj;
}

namespace {
Tape& tape_of(const Var& a, const Var& b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw std::invalid_argument("mixed tapes");
  return *a.tape();
}
}  // namespace

Var operator+(const Var& a, const Var& b) {
  return tape_of(a, b).binary(a.value() + b.value(), a, 1.0, b, 1.0);
}
Var operator-(const Var& a, const Var& b) {
  return tape_of(a, b).binary(a.value() - b.value(), a, 1.0, b, -1.0);
}
Var operator*(const Var& a, const Var& b) {
  return tape_of(a, b).binary(a.value() * b.value(), a, b.value(), b, a.value());
}
Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  return tape_of(a, b).binary(a.value() * inv, a, inv, b, -a.value() * inv * inv);
}
Var operator-(const Var& a) { return a.tape()->unary(-a.value(), a, -1.0); }

Var operator+(const Var& a, double b) { return a.tape()->unary(a.value() + b, a, 1.0); }
Var operator+(double a, const Var& b) { return b + a; }
Var operator-(const Var& a, double b) { return a.tape()->unary(a.value() - b, a, 1.0); }
Var operator-(double a, const Var& b) { return b.tape()->unary(a - b.value(), b, -1.0); }
Var operator*(const Var& a, double b) { return a.tape()->unary(a.value() * b, a, b); }
Var operator*(double a, const Var& b) { return b * a; }
Var operator/(const Var& a, double b) { return a.tape()->unary(a.value() / b, a, 1.0 / b); }

Var square(const Var& a) { return a.tape()->unary(a.value() * a.value(), a, 2.0 * a.value()); }

Var sqrt(const Var& a) {
  const double s = std::sqrt(a.value());
  return a.tape()->unary(s, a, 0.5 / s);
}

Var sum(std::span<const Var> terms) {
  if (terms.empty()) throw std::invalid_argument("sum of no terms");
  Var acc = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) acc = acc + terms[k];
  return acc;
}

Var mean(std::span<const Var> terms) {
  return sum(terms) / static_cast<double>(terms.size());
}

}  // namespace reveal::ad
