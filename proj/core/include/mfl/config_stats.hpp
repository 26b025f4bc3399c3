#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace mfl {

// N labeled points in R^d at a timestamp. Positions are row-major (n x dim).
struct ParticleConfig {
  int dim = 0;
  std::size_t n = 0;
  std::vector<double> positions;
  double time = 0.0;

  const double* point(std::size_t i) const { return positions.data() + i * dim; }
  double* point(std::size_t i) { return positions.data() + i * dim; }
  double dist(std::size_t i, std::size_t j) const;
};

// Pairwise-distance statistics: d_min, nearest neighbours, d_min,1 and the
// close set D_delta = { i : d_{i,i_nn} < delta } (strict inequality).
struct DistanceReport {
  double d_min = 0.0;
  std::vector<std::size_t> nn_index;  // nearest neighbour, ties -> smallest index
  std::vector<double> nn_dist;
  double d_min1 = 0.0;                // min_i min_{j != i, i_nn} d_ij
  bool d_min1_defined = true;         // false for N = 2 (reported as +inf)
  double delta = 0.0;
  std::vector<std::size_t> close_set;
  double close_mass = 0.0;            // |D_delta| / N
};

DistanceReport distance_report(const ParticleConfig& config, double delta);

// Per-particle two smallest distances and their indices, nn ties broken by
// smallest index. Row i holds {(d1, j1), (d2, j2)} with d1 <= d2, j2 != j1.
struct NearestTwo {
  std::vector<double> dist1, dist2;
  std::vector<std::size_t> idx1, idx2;
};
NearestTwo nearest_two(const ParticleConfig& config);

// Per-particle three smallest distances (padded with +inf for N <= 3).
struct NearestThree {
  std::vector<std::array<double, 3>> dist;
  std::vector<std::array<std::size_t, 3>> idx;
};
NearestThree nearest_three(const ParticleConfig& config);

// Cut-off sums S_{beta,delta}: per-particle sum over {j : d_ij > delta} of
// d_ij^{-beta} (strict inequality), and their maximum. Fixed ascending-j
// order with compensated accumulation.
struct CutoffSums {
  std::vector<double> per_particle;
  double max = 0.0;
};
CutoffSums cutoff_sum(const ParticleConfig& config, double beta, double delta);

// Exact fixed-radius pair lists (d_ij <= radius) via uniform-cell binning
// with cell edge = radius. Pairs (i, j) with i < j, sorted lexicographically;
// equal to brute-force enumeration.
std::vector<std::pair<std::size_t, std::size_t>> neighbor_index(const ParticleConfig& config,
                                                                double radius);

// Max over i of #{ j : X_j in closed ball B_delta(X_i) }, including j = i.
std::size_t max_ball_count(const ParticleConfig& config, double delta);

inline double pos_inf() { return std::numeric_limits<double>::infinity(); }

}  // namespace mfl
