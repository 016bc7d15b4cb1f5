#include "reveal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "reveal/rng.hpp"

namespace reveal {

double CandidateSet::expected_size() const {
  return std::accumulate(inclusion_prob.begin(), inclusion_prob.end(), 0.0);
}

CandidateSet uniform_probs(const std::vector<Point>& points, std::size_t n) {
  if (n == 0 || n > points.size()) {
    throw std::invalid_argument("sample size must be in [1, candidate count]");
  }
  return {points, std::vector<double>(points.size(),
                                      static_cast<double>(n) / static_cast<double>(points.size()))};
}

namespace {

constexpr double kResolvedEps = 1e-9;

bool resolved(double p) { return p <= kResolvedEps || p >= 1.0 - kResolvedEps; }

}  // namespace

std::vector<std::size_t> lpm_select(const CandidateSet& c, std::uint64_t seed) {
  const std::size_t count = c.points.size();
  if (count == 0) throw std::invalid_argument("empty candidate set");
  if (count < 2) throw std::invalid_argument("need at least two candidates");
  if (c.inclusion_prob.size() != count) {
    throw std::invalid_argument("inclusion probabilities do not match candidates");
  }
  for (double p : c.inclusion_prob) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("inclusion probability outside (0, 1]");
  }

  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& p : c.points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double sx = x1 > x0 ? 1.0 / (x1 - x0) : 1.0;
  const double sy = y1 > y0 ? 1.0 / (y1 - y0) : 1.0;
  std::vector<UnitPoint> unit(count);
  for (std::size_t k = 0; k < count; ++k) {
    unit[k] = {(c.points[k].x - x0) * sx, (c.points[k].y - y0) * sy};
  }

  std::vector<double> prob = c.inclusion_prob;
  // Undecided units, kept in increasing index order so ties resolve to the
  // lowest index.
  std::vector<std::size_t> open;
  for (std::size_t k = 0; k < count; ++k) {
    if (resolved(prob[k])) {
      prob[k] = prob[k] >= 0.5 ? 1.0 : 0.0;
    } else {
      open.push_back(k);
    }
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  while (open.size() >= 2) {
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng);
    const std::size_t i = open[pick];

    std::size_t j = count;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k : open) {
      if (k == i) continue;
      const double du = unit[k].u - unit[i].u;
      const double dv = unit[k].v - unit[i].v;
      const double d2 = du * du + dv * dv;
      if (d2 < best) {
        best = d2;
        j = k;
      }
    }

    const double a = prob[i];
    const double b = prob[j];
    const double u = uniform(rng);
    if (a + b < 1.0) {
      if (u < b / (a + b)) {
        prob[i] = 0.0;
        prob[j] = a + b;
      } else {
        prob[i] = a + b;
        prob[j] = 0.0;
      }
    } else {
      if (u < (1.0 - b) / (2.0 - a - b)) {
        prob[i] = 1.0;
        prob[j] = a + b - 1.0;
      } else {
        prob[i] = a + b - 1.0;
        prob[j] = 1.0;
      }
    }

    for (std::size_t k : {i, j}) {
      if (resolved(prob[k])) prob[k] = prob[k] >= 0.5 ? 1.0 : 0.0;
    }
    std::erase_if(open, [&](std::size_t k) { return (k == i || k == j) && resolved(prob[k]); });
  }
  // A single leftover unit only occurs when the probabilities do not sum to
  // an integer; settle it with its own Bernoulli draw.
  if (open.size() == 1) prob[open.front()] = uniform(rng) < prob[open.front()] ? 1.0 : 0.0;

  std::vector<std::size_t> selected;
  for (std::size_t k = 0; k < count; ++k) {
    if (prob[k] == 1.0) selected.push_back(k);
  }
  return selected;
}

std::vector<std::size_t> random_select(std::size_t count, std::size_t n, std::uint64_t seed) {
  if (n > count) throw std::invalid_argument("sample size exceeds candidate count");
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = std::uniform_int_distribution<std::size_t>(k, count - 1)(rng);
    std::swap(idx[k], idx[r]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double mean_nearest_neighbor_distance(const std::vector<Point>& points) {
  if (points.size() < 2) throw std::invalid_argument("need at least two points");
  double total = 0.0;
  for (std::size_t a = 0; a < points.size(); ++a) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < points.size(); ++b) {
      if (a != b) best = std::min(best, distance(points[a], points[b]));
    }
    total += best;
  }
  return total / static_cast<double>(points.size());
}

}  // namespace reveal
