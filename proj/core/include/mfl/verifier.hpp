#pragma once

#include <cstdint>
#include <vector>

#include "mfl/config_stats.hpp"
#include "mfl/dynamics.hpp"
#include "mfl/kernels.hpp"
#include "mfl/transport.hpp"

namespace mfl {

// delta_N = N^{-3/(2d) - eps}.
double select_delta(std::size_t n, int d, double eps);

// Finite-N cutoffs standing in for the asymptotic smallness/largeness
// conditions, plus the sampling controls of the W_p surrogate.
struct VerifierThresholds {
  double theta_sep = 4.0;     // >= 1: separation factor for the pair condition
  double theta_small = 0.25;  // in (0,1): smallness cutoff for the triple statistic
  double conv_cutoff = pos_inf();  // pass cutoff on the W_p statistic itself
  double wp_cutoff = 1.0;          // pass cutoff on the combined display value
  int wp_repeats = 3;              // resamples of the reference cloud
  std::uint64_t seed = 1;
};

struct AssumptionReport {
  double delta_n = 0.0;
  bool delta_le_dmin1 = false;  // hard requirement delta_n <= d_min,1(0)
  double d_min0 = 0.0;
  double d_min1 = 0.0;
  double close_mass = 0.0;  // empirical mass of the close set at level delta_n

  double w_p0 = 0.0;       // W_p surrogate against the reference cloud
  double w_p_floor = 0.0;  // discretization floor of the surrogate

  double cond_conv = 0.0;  // the convergence statistic (= w_p0)
  bool conv_pass = false;
  double cond_wp = 0.0;  // combined initial-data statistic (finite-p or sup form)
  bool wp_pass = false;

  struct Strong1 {
    bool pass = true;
    double worst_ratio = 0.0;  // min over qualifying pairs of d_ik / delta_n
    std::size_t pairs_checked = 0;
  } cond_strong1;
  struct Strong2 {
    bool pass = true;
    double worst_value = 0.0;  // max of (1/N) d_ij^{-1} d_ik^{-alpha}
    std::size_t pairs_checked = 0;
  } cond_strong2;
  struct Absorbable {
    bool pass = false;
    double lhs = 0.0;  // N^{-1} close_mass^{1/p} d_min(0)^{-alpha}
    double rhs = 0.0;  // w_p0
  } cond_absorbable;

  VerifierThresholds thresholds;

  bool all_pass() const {
    return delta_le_dmin1 && conv_pass && wp_pass && cond_strong1.pass &&
           cond_strong2.pass && cond_absorbable.pass;
  }
};

// Checks the initial-data hypotheses on a concrete configuration against a
// reference sample cloud; p may be infinity().
AssumptionReport check_assumptions(const ParticleConfig& config0, const PointCloud& reference,
                                   const KernelSpec& kernel, double delta_n, double p,
                                   const VerifierThresholds& thresholds = {});

struct ConclusionReport {
  double fitted_c_dist = 0.0;  // smallest C with d_ij(t) >= e^{-Ct} d_ij(0)
  double fitted_c_wp = 0.0;    // least-squares growth rate of log W_p(t)
  double prefactor = 0.0;      // fitted K with W_p(t) ~ K (W_p(0)+penalty) e^{Ct}
  double penalty = 0.0;        // N^{-1} close_mass^{1/p} d_min(0)^{-alpha}
  double w_p0 = 0.0;
  std::vector<double> times;
  std::vector<double> wp_series;
  std::vector<double> wp_floor_series;
  std::vector<double> margins;  // wp(t) / (K (w_p0+penalty) e^{Ct})
};

// Fits the conclusion constants on a particle trajectory against a reference
// trajectory sampled on the same time grid.
ConclusionReport check_conclusions(const Trajectory& micro, const Trajectory& reference,
                                   double p, double delta_n, int wp_repeats = 3,
                                   std::uint64_t seed = 1);

struct BootstrapSeries {
  std::vector<double> times;
  std::vector<double> delta;     // delta(t) = (1/2) delta_n e^{-2 L1 (t - t0)}
  std::vector<double> s_over_n;  // S_{alpha+1, delta(t)} / N
  std::vector<double> d_min1;
  std::vector<bool> flags;  // true where d_min,1(t) < delta(t)
  double implied_l2 = 0.0;  // max_t S_{alpha+1, delta(t)} / N
};

BootstrapSeries bootstrap_monitor(const Trajectory& micro, double delta_n, double l1,
                                  double alpha);

struct CutoffBoundReport {
  double lhs = 0.0;  // (1/N) S_{beta,delta}
  double rhs = 0.0;  // explicit upper bound evaluated with the W_p surrogate
  double ratio = 0.0;
  std::size_t ball_count = 0;  // computed M = max_i #{j : X_j in B_delta(X_i)}
  double w_p = 0.0;
};

// Two-sided comparison of the cut-off sum against its explicit bound in terms
// of M, N, delta, ||sigma||_inf and the W_p surrogate; p may be infinity().
CutoffBoundReport check_lemma21(const ParticleConfig& config, const PointCloud& reference,
                                double beta, double delta, double p, double rho_inf,
                                int wp_repeats = 3, std::uint64_t seed = 1);

// Row-major particle positions as a uniform-weight cloud.
PointCloud config_to_cloud(const ParticleConfig& config);

}  // namespace mfl
