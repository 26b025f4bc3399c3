#include "mfl/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfl/parallel.hpp"

namespace mfl {

namespace {

bool is_inf_p(double p) { return std::isinf(p); }

// (mass)^{1/p} with the p = infinity limit: 1 for positive mass, 0 otherwise.
double mass_power(double mass, double p) {
  if (is_inf_p(p)) return mass > 0.0 ? 1.0 : 0.0;
  return std::pow(mass, 1.0 / p);
}

}  // namespace

double select_delta(std::size_t n, int d, double eps) {
  if (d < 1) throw std::invalid_argument("select_delta: d >= 1");
  if (eps < 0.0) throw std::invalid_argument("select_delta: eps >= 0");
  double expo = -3.0 / (2.0 * static_cast<double>(d)) - eps;
  return std::pow(static_cast<double>(n), expo);
}

PointCloud config_to_cloud(const ParticleConfig& config) {
  return uniform_cloud(config.dim, config.positions);
}

AssumptionReport check_assumptions(const ParticleConfig& config0, const PointCloud& reference,
                                   const KernelSpec& kernel, double delta_n, double p,
                                   const VerifierThresholds& thresholds) {
  if (reference.dim != config0.dim)
    throw std::invalid_argument("check_assumptions: reference cloud dimension mismatch");
  if (kernel.dim != config0.dim)
    throw std::invalid_argument("check_assumptions: kernel dimension mismatch");
  if (!(delta_n > 0.0)) throw std::invalid_argument("check_assumptions: delta_n > 0");
  if (!(p >= 1.0)) throw std::invalid_argument("check_assumptions: p >= 1");
  if (!(thresholds.theta_sep >= 1.0))
    throw std::invalid_argument("check_assumptions: theta_sep >= 1");
  if (!(thresholds.theta_small > 0.0 && thresholds.theta_small < 1.0))
    throw std::invalid_argument("check_assumptions: theta_small in (0,1)");

  const std::size_t n = config0.n;
  const int d = config0.dim;
  const double alpha = kernel.alpha;
  const double invn = 1.0 / static_cast<double>(n);

  AssumptionReport rep;
  rep.delta_n = delta_n;
  rep.thresholds = thresholds;

  DistanceReport dr = distance_report(config0, delta_n);
  rep.d_min0 = dr.d_min;
  rep.d_min1 = dr.d_min1;
  rep.close_mass = dr.close_mass;
  rep.delta_le_dmin1 = delta_n <= dr.d_min1;

  ReferenceEstimate west = wasserstein_vs_reference(config_to_cloud(config0), reference, p,
                                                    thresholds.wp_repeats, thresholds.seed);
  rep.w_p0 = west.value;
  rep.w_p_floor = west.floor;
  rep.cond_conv = west.value;
  rep.conv_pass = west.value <= thresholds.conv_cutoff;

  const double a1 = alpha + 1.0;
  const double prefactor = 1.0 / (std::pow(static_cast<double>(n), a1 / d) * std::pow(delta_n, a1));
  if (is_inf_p(p)) {
    double term_a = std::pow(rep.w_p0, d - a1);
    double term_b = std::pow(invn * std::pow(rep.d_min0, -alpha), d - a1);
    rep.cond_wp = prefactor * (term_a + term_b);
  } else {
    double term_a = std::pow(rep.w_p0, (d - a1) * p / (d + p));
    double inner = std::pow(invn, p) * rep.close_mass * std::pow(rep.d_min0, -alpha * p);
    double term_b = std::pow(inner, (d - a1) / (d + p));
    rep.cond_wp = prefactor * (term_a + term_b);
  }
  rep.wp_pass = rep.cond_wp <= thresholds.wp_cutoff;

  NearestTwo nt = nearest_two(config0);
  NearestThree n3 = nearest_three(config0);
  auto close_pairs = neighbor_index(config0, delta_n);  // d_ij <= delta_n inclusive

  // Pair separation: every particle at distance <= delta_n from some partner
  // must keep all other particles at distance >= theta_sep * delta_n.
  rep.cond_strong1.worst_ratio = pos_inf();
  auto strong1_one = [&](std::size_t i, std::size_t j) {
    double d_ik = nt.idx1[i] == j ? nt.dist2[i] : nt.dist1[i];
    if (!std::isfinite(d_ik)) return;  // no third particle
    ++rep.cond_strong1.pairs_checked;
    rep.cond_strong1.worst_ratio = std::min(rep.cond_strong1.worst_ratio, d_ik / delta_n);
  };
  for (auto [i, j] : close_pairs) {
    strong1_one(i, j);
    strong1_one(j, i);
  }
  rep.cond_strong1.pass = rep.cond_strong1.worst_ratio >= thresholds.theta_sep;

  // Triple smallness: for every pair at distance < delta_n, the statistic
  // (1/N) d_ij^{-1} d_ik^{-alpha} over the two nearest admissible j stays
  // below theta_small; the statistic is maximal at the nearest neighbours.
  rep.cond_strong2.worst_value = 0.0;
  auto strong2_one = [&](std::size_t i, std::size_t k, double d_ik) {
    int used = 0;
    bool any = false;
    for (int q = 0; q < 3 && used < 2; ++q) {
      if (n3.idx[i][q] == k || !std::isfinite(n3.dist[i][q])) continue;
      ++used;
      any = true;
      double val = invn / n3.dist[i][q] * std::pow(d_ik, -alpha);
      rep.cond_strong2.worst_value = std::max(rep.cond_strong2.worst_value, val);
    }
    if (any) ++rep.cond_strong2.pairs_checked;
  };
  for (auto [i, k] : close_pairs) {
    double d_ik = config0.dist(i, k);
    if (!(d_ik < delta_n)) continue;  // strict inequality
    strong2_one(i, k, d_ik);
    strong2_one(k, i, d_ik);
  }
  rep.cond_strong2.pass = rep.cond_strong2.worst_value <= thresholds.theta_small;

  rep.cond_absorbable.lhs = invn * mass_power(rep.close_mass, p) * std::pow(rep.d_min0, -alpha);
  rep.cond_absorbable.rhs = rep.w_p0;
  rep.cond_absorbable.pass = rep.cond_absorbable.lhs <= rep.cond_absorbable.rhs;
  return rep;
}

ConclusionReport check_conclusions(const Trajectory& micro, const Trajectory& reference,
                                   double p, double delta_n, int wp_repeats,
                                   std::uint64_t seed) {
  const std::size_t k_samples = micro.sample_times.size();
  if (k_samples == 0 || micro.configs.size() != k_samples)
    throw std::invalid_argument("check_conclusions: empty or inconsistent trajectory");
  if (reference.sample_times.size() != k_samples)
    throw std::invalid_argument("check_conclusions: mismatched sampling grids");
  for (std::size_t k = 0; k < k_samples; ++k) {
    double a = micro.sample_times[k], b = reference.sample_times[k];
    if (std::abs(a - b) > 1e-9 * (1.0 + std::abs(a)))
      throw std::invalid_argument("check_conclusions: mismatched sampling grids");
  }
  if (reference.configs.front().n < micro.configs.front().n)
    throw std::invalid_argument("check_conclusions: reference cloud smaller than system");

  const ParticleConfig& x0 = micro.configs.front();
  const std::size_t n = x0.n;
  const double t0 = micro.sample_times.front();
  const double alpha = micro.kernel.alpha;

  ConclusionReport rep;
  rep.times = micro.sample_times;

  // Smallest C with d_ij(t) >= e^{-Ct} d_ij(0), i.e. the largest observed
  // contraction rate over samples and pairs, clipped at 0.
  double c_dist = 0.0;
  if (n >= 2) {
    std::vector<double> best(n, -pos_inf());
    for (std::size_t k = 1; k < k_samples; ++k) {
      double dt = micro.sample_times[k] - t0;
      if (!(dt > 0.0)) continue;
      const ParticleConfig& xk = micro.configs[k];
      parallel_for(n, [&](std::size_t i) {
        double b = -pos_inf();
        for (std::size_t j = i + 1; j < n; ++j) {
          double r0 = x0.dist(i, j);
          double rt = xk.dist(i, j);
          b = std::max(b, std::log(r0 / rt));
        }
        best[i] = b;
      });
      double m = -pos_inf();
      for (double b : best) m = std::max(m, b);
      c_dist = std::max(c_dist, m / dt);
    }
  }
  rep.fitted_c_dist = std::max(0.0, c_dist);

  DistanceReport dr0 = distance_report(x0, delta_n);
  rep.penalty = mass_power(dr0.close_mass, p) * std::pow(dr0.d_min, -alpha) /
                static_cast<double>(n);

  for (std::size_t k = 0; k < k_samples; ++k) {
    ReferenceEstimate w =
        wasserstein_vs_reference(config_to_cloud(micro.configs[k]),
                                 config_to_cloud(reference.configs[k]), p, wp_repeats,
                                 seed);
    rep.wp_series.push_back(w.value);
    rep.wp_floor_series.push_back(w.floor);
  }
  rep.w_p0 = rep.wp_series.front();

  // Least squares of log W_p(t) against t - t0; intercept = log(K (W_p(0)+penalty)).
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t npts = 0;
  for (std::size_t k = 0; k < k_samples; ++k) {
    double w = rep.wp_series[k];
    if (!(w > 0.0) || !std::isfinite(w)) continue;
    double x = micro.sample_times[k] - t0;
    double y = std::log(w);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++npts;
  }
  double slope = 0.0, intercept = rep.w_p0 > 0.0 ? std::log(rep.w_p0) : 0.0;
  if (npts >= 2) {
    double denom = npts * sxx - sx * sx;
    if (denom > 0.0) {
      slope = (npts * sxy - sx * sy) / denom;
      intercept = (sy - slope * sx) / npts;
    } else {
      intercept = sy / static_cast<double>(npts);
    }
  }
  rep.fitted_c_wp = std::max(0.0, slope);
  double base = rep.w_p0 + rep.penalty;
  rep.prefactor = base > 0.0 ? std::exp(intercept) / base : 0.0;

  for (std::size_t k = 0; k < k_samples; ++k) {
    double envelope =
        rep.prefactor * base * std::exp(rep.fitted_c_wp * (micro.sample_times[k] - t0));
    rep.margins.push_back(envelope > 0.0 ? rep.wp_series[k] / envelope : 0.0);
  }
  return rep;
}

BootstrapSeries bootstrap_monitor(const Trajectory& micro, double delta_n, double l1,
                                  double alpha) {
  if (!(delta_n > 0.0)) throw std::invalid_argument("bootstrap_monitor: delta_n > 0");
  if (l1 < 0.0) throw std::invalid_argument("bootstrap_monitor: L1 >= 0");
  BootstrapSeries out;
  if (micro.sample_times.empty()) return out;
  const double t0 = micro.sample_times.front();
  for (std::size_t k = 0; k < micro.sample_times.size(); ++k) {
    double t = micro.sample_times[k];
    double dl = 0.5 * delta_n * std::exp(-2.0 * l1 * (t - t0));
    const ParticleConfig& cfg = micro.configs[k];
    double s_over_n = 0.0;
    double dm1 = pos_inf();
    if (cfg.n >= 2) {
      s_over_n = cutoff_sum(cfg, alpha + 1.0, dl).max / static_cast<double>(cfg.n);
      dm1 = distance_report(cfg, 0.0).d_min1;
    }
    out.times.push_back(t);
    out.delta.push_back(dl);
    out.s_over_n.push_back(s_over_n);
    out.d_min1.push_back(dm1);
    out.flags.push_back(dm1 < dl);
    out.implied_l2 = std::max(out.implied_l2, s_over_n);
  }
  return out;
}

CutoffBoundReport check_lemma21(const ParticleConfig& config, const PointCloud& reference,
                                double beta, double delta, double p, double rho_inf,
                                int wp_repeats, std::uint64_t seed) {
  const int d = config.dim;
  if (!(beta > 0.0) || beta >= static_cast<double>(d))
    throw std::invalid_argument("check_lemma21: beta in (0, d)");
  if (!(delta > 0.0)) throw std::invalid_argument("check_lemma21: delta > 0");
  if (!(rho_inf > 0.0)) throw std::invalid_argument("check_lemma21: rho_inf > 0");
  if (reference.dim != d)
    throw std::invalid_argument("check_lemma21: reference cloud dimension mismatch");

  const double n = static_cast<double>(config.n);
  CutoffBoundReport rep;
  rep.lhs = cutoff_sum(config, beta, delta).max / n;
  rep.ball_count = max_ball_count(config, delta);
  rep.w_p = wasserstein_vs_reference(config_to_cloud(config), reference, p, wp_repeats, seed)
                .value;

  const double m = static_cast<double>(rep.ball_count);
  const double base = std::pow(rho_inf, beta / d);
  const double scale = std::pow(m, beta / d) / (std::pow(n, beta / d) * std::pow(delta, beta));
  if (std::isinf(p)) {
    rep.rhs = base + scale * std::pow(rho_inf, (d - beta) / d) * std::pow(rep.w_p, d - beta);
  } else {
    double f1 = scale * std::pow(rho_inf, ((d - beta) / d) * (p / (d + p)));
    double f2 = std::pow(scale * std::pow(rho_inf, (d - beta) / d), (beta + p) / (d + p));
    rep.rhs = base + (f1 + f2) * std::pow(rep.w_p, (d - beta) * p / (d + p));
  }
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? pos_inf() : 0.0);
  return rep;
}

}  // namespace mfl
