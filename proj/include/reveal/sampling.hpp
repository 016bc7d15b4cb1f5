#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "reveal/grid.hpp"

namespace reveal {

/// Candidate sensor sites with first-order inclusion probabilities.
struct CandidateSet {
  std::vector<Point> points;
  std::vector<double> inclusion_prob;

  /// Expected sample size, the sum of the inclusion probabilities.
  double expected_size() const;
};

/// Every probability set to n / count. Throws when n is 0 or exceeds count.
CandidateSet uniform_probs(const std::vector<Point>& points, std::size_t n);

/// Local pivotal method, LPM-1 variant: pick an undecided unit uniformly, pair
/// it with its nearest undecided neighbor (lowest index on ties) and move
/// probability mass between the two until one of them is 0 or 1. Distances
/// are Euclidean after scaling the candidates' bounding box to the unit square.
/// Returns the selected indices in increasing order.
std::vector<std::size_t> lpm_select(const CandidateSet& c, std::uint64_t seed);

/// Simple random sampling without replacement, indices in increasing order.
std::vector<std::size_t> random_select(std::size_t count, std::size_t n, std::uint64_t seed);

/// Mean distance from each point to its nearest other point in the set.
double mean_nearest_neighbor_distance(const std::vector<Point>& points);

}  // namespace reveal
