#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mfl {

// Weighted point cloud representing a discrete probability measure.
struct PointCloud {
  int dim = 0;
  std::size_t m = 0;
  std::vector<double> points;   // m x dim, row-major
  std::vector<double> weights;  // nonnegative, sum to 1 (tolerance 1e-12)

  const double* point(std::size_t i) const { return points.data() + i * dim; }
  bool uniform_weights(double tol = 1e-12) const;
  void validate() const;  // throws invalid_argument on bad weights/shape
};

PointCloud uniform_cloud(int dim, std::vector<double> points);

struct PlanEntry {
  std::size_t i = 0, j = 0;
  double mass = 0.0;
};

struct TransportResult {
  double p = 1.0;  // infinity() for the bottleneck distance
  double value = 0.0;
  std::vector<PlanEntry> plan;
  bool optimal = false;
};

// Exact W_p for finite p >= 1. Equal-size uniform clouds are solved as a
// dense linear assignment; the general weighted case as successive shortest
// path min-cost flow with weights rounded to a 2^40 integer grid.
TransportResult wasserstein_p(const PointCloud& a, const PointCloud& b, double p);

// Exact bottleneck distance between equal-size uniform clouds: binary search
// over the sorted pairwise distances, feasibility by maximum bipartite
// matching restricted to edges below the threshold.
TransportResult wasserstein_inf(const PointCloud& a, const PointCloud& b);

// Exhaustive oracle over all m! matchings; m <= 8, uniform weights.
// p may be infinity().
double brute_force_wasserstein(const PointCloud& a, const PointCloud& b, double p);

// W_p surrogate between an m-point empirical cloud and a (typically larger)
// reference sample cloud: the reference is subsampled without replacement to
// size m, the assignment is solved exactly, and the median over `repeats`
// resamples is reported together with the discretization floor.
struct ReferenceEstimate {
  double value = 0.0;            // median over resamples
  double floor = 0.0;            // ~ min(m, M)^{-1/d} resolution floor
  std::vector<double> values;    // one exact value per resample
};
ReferenceEstimate wasserstein_vs_reference(const PointCloud& empirical,
                                           const PointCloud& reference, double p,
                                           int repeats, std::uint64_t seed);

// Dense square linear assignment (Jonker-Volgenant). Returns the optimal
// total cost; rowsol[i] = assigned column. Deterministic for fixed input.
double solve_assignment(std::size_t n, const std::vector<double>& cost,
                        std::vector<int>& rowsol);

std::string plan_to_csv(const TransportResult& r, const PointCloud& a, const PointCloud& b);

}  // namespace mfl
