#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mfl/config_stats.hpp"
#include "mfl/verifier.hpp"

namespace mfl {

enum class DensityFamily { uniform_cube, affine, sine_warp };

// Lipschitz pushforwards of the uniform measure on the unit cube, with
// analytic Lipschitz constant and sup-density.
struct DensitySpec {
  DensityFamily family = DensityFamily::uniform_cube;
  int dim = 0;
  std::vector<double> A;    // affine: dim x dim row-major
  std::vector<double> b;    // affine: shift
  double amplitude = 0.0;   // sine-warp: a in [0, 1/(2 pi))

  double lipschitz_const() const;
  double sup_density() const;
  void validate() const;  // throws invalid_argument

  static DensitySpec uniform(int d);
  static DensitySpec affine_map(int d, std::vector<double> a, std::vector<double> shift);
  static DensitySpec sine(int d, double a);
};

// n i.i.d. draws: a uniform cube sample mapped through the family map.
// Identical (seed, n) give bitwise identical configurations.
ParticleConfig sample_config(const DensitySpec& density, std::size_t n, std::uint64_t seed);

// Wilson 95% score interval for a binomial proportion.
struct WilsonInterval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t successes = 0;
  std::size_t trials = 0;
};
WilsonInterval wilson(std::size_t successes, std::size_t trials,
                      double z = 1.959963984540054);

struct ProbEstimate {
  WilsonInterval interval;
  double threshold = 0.0;       // event threshold actually used
  double mean_statistic = 0.0;  // auxiliary per-replica mean (estimator-specific)
  double bound = 0.0;           // analytic right-side bound with unit constant
};

// P(d_min <= L^{-1} N^{-2/d}).
ProbEstimate estimate_dmin_tail(const DensitySpec& density, std::size_t n, double l,
                                int replicas, std::uint64_t seed);

// P(d_min,1 <= L^{-1} N^{-3/(2d)}).
ProbEstimate estimate_dmin1_tail(const DensitySpec& density, std::size_t n, double l,
                                 int replicas, std::uint64_t seed);

// P(exists i != j != k != i : d_ik < delta and N^{-1} d_ij^{-1} d_ik^{-beta}
// >= N^{-eps}); detection restricted to the two nearest admissible j, which
// is exact because the statistic is maximal at minimal d_ij. `bound` holds
// the three-regime analytic estimate with unit constants.
ProbEstimate estimate_triple_event(const DensitySpec& density, std::size_t n, double beta,
                                   double eps, double delta, int replicas,
                                   std::uint64_t seed);

// Brute-force O(N^3) oracle for the same event on a single configuration.
bool triple_event_brute_force(const ParticleConfig& config, double beta, double eps,
                              double delta);
bool triple_event_detect(const ParticleConfig& config, double beta, double eps, double delta);

// P(#{i : d_{i,i_nn} <= delta N^{-1/d}} >= 2 theta N); mean_statistic is the
// mean count fraction.
ProbEstimate estimate_close_pairs_tail(const DensitySpec& density, std::size_t n,
                                       double delta, double theta, int replicas,
                                       std::uint64_t seed);

struct ScalingStudy {
  std::vector<std::size_t> n_list;
  std::vector<double> medians;  // per-N median surrogate W_p
  std::vector<double> floors;
  double slope = 0.0;  // least-squares slope of log median vs log N
  double slope_stderr = 0.0;
  std::vector<double> residuals;
};

// Median W_p against a reference cloud of size reference_factor * N; fits a
// pure power law and reports residuals.
ScalingStudy wasserstein_scaling_study(const DensitySpec& density, double p,
                                       const std::vector<std::size_t>& n_list, int replicas,
                                       int reference_factor, std::uint64_t seed);

struct ConditionBreakdown {
  std::size_t n = 0;
  WilsonInterval all;
  WilsonInterval delta_le_dmin1;
  WilsonInterval conv;
  WilsonInterval wp;
  WilsonInterval strong1;
  WilsonInterval strong2;
  WilsonInterval absorbable;
};

struct AssumptionsProbability {
  std::vector<ConditionBreakdown> per_n;
  std::vector<std::string> warnings;
};

// Warnings when (d, alpha, p) leave the regime in which i.i.d. data satisfy
// the hypotheses with probability tending to 1.
std::vector<std::string> regime_warnings(int d, double alpha, double p);

// Per-replica full hypothesis check with delta_N = select_delta(N, d, eps);
// fraction of replicas satisfying all conditions plus per-condition rates.
AssumptionsProbability assumptions_probability(const DensitySpec& density, double alpha,
                                               double p, double eps,
                                               const std::vector<std::size_t>& n_list,
                                               int replicas,
                                               const VerifierThresholds& thresholds,
                                               int reference_factor, std::uint64_t seed);

struct MCRow {
  std::size_t n = 0;
  ProbEstimate estimate;
};

struct MCReport {
  std::string estimator;
  std::vector<std::pair<std::string, double>> params;
  std::vector<MCRow> rows;
  double fitted_exponent = 0.0;
  double exponent_stderr = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;
};

}  // namespace mfl
