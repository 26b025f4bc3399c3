#include "mfl/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "mfl/kernels.hpp"
#include "mfl/parallel.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

// Stream tags keep replica seeds of different estimators disjoint.
constexpr std::uint64_t kTagDmin = 0x646d696eULL;
constexpr std::uint64_t kTagDmin1 = 0x646d3161ULL;
constexpr std::uint64_t kTagTriple = 0x74726970ULL;
constexpr std::uint64_t kTagClose = 0x636c6f73ULL;
constexpr std::uint64_t kTagScaling = 0x7363616cULL;
constexpr std::uint64_t kTagAssume = 0x61737375ULL;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                          std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ a) ^ b);
}

double det_and_lu(std::vector<double> m, int d) {
  double det = 1.0;
  for (int c = 0; c < d; ++c) {
    int piv = c;
    for (int r = c + 1; r < d; ++r)
      if (std::abs(m[r * d + c]) > std::abs(m[piv * d + c])) piv = r;
    if (piv != c) {
      for (int k = 0; k < d; ++k) std::swap(m[c * d + k], m[piv * d + k]);
      det = -det;
    }
    double p = m[c * d + c];
    det *= p;
    if (p == 0.0) return 0.0;
    for (int r = c + 1; r < d; ++r) {
      double f = m[r * d + c] / p;
      for (int k = c; k < d; ++k) m[r * d + k] -= f * m[c * d + k];
    }
  }
  return det;
}

double spectral_norm(const std::vector<double>& a, int d) {
  // power iteration on A^T A from a fixed start vector
  std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d))), av(d), w(d);
  double lam = 0.0;
  for (int it = 0; it < 200; ++it) {
    for (int r = 0; r < d; ++r) {
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += a[r * d + c] * v[c];
      av[r] = s;
    }
    for (int c = 0; c < d; ++c) {
      double s = 0.0;
      for (int r = 0; r < d; ++r) s += a[r * d + c] * av[r];
      w[c] = s;
    }
    double nrm = 0.0;
    for (double x : w) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return 0.0;
    lam = nrm;
    for (int c = 0; c < d; ++c) v[c] = w[c] / nrm;
  }
  return std::sqrt(lam);
}

// Early-exit cell-binned detector: need = 1 asks for any pair within radius,
// need = 2 for any particle with two partners within radius.
bool ball_event(const ParticleConfig& cfg, double radius, int need) {
  if (!(radius > 0.0) || cfg.n < static_cast<std::size_t>(need) + 1) return false;
  const std::size_t n = cfg.n;
  const int d = cfg.dim;
  std::vector<double> lo(d, pos_inf());
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) lo[c] = std::min(lo[c], cfg.point(i)[c]);
  auto key = [&](const std::vector<long long>& cell) {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (long long v : cell) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return h;
  };
  std::vector<long long> cell(d), nb(d);
  auto cell_of = [&](std::size_t i) {
    for (int c = 0; c < d; ++c)
      cell[c] = static_cast<long long>(std::floor((cfg.point(i)[c] - lo[c]) / radius));
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  grid.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    cell_of(i);
    grid[key(cell)].push_back(i);
  }
  const double r2max = radius * radius;
  for (std::size_t i = 0; i < n; ++i) {
    cell_of(i);
    int hits = 0;
    std::vector<int> off(d, -1);
    for (;;) {
      for (int c = 0; c < d; ++c) nb[c] = cell[c] + off[c];
      auto it = grid.find(key(nb));
      if (it != grid.end()) {
        for (std::size_t j : it->second) {
          if (j == i) continue;
          double r2 = 0.0;
          for (int c = 0; c < d; ++c) {
            double dd = cfg.point(i)[c] - cfg.point(j)[c];
            r2 += dd * dd;
          }
          if (r2 <= r2max && ++hits >= need) return true;
        }
      }
      int c = 0;
      while (c < d && off[c] == 1) off[c++] = -1;
      if (c == d) break;
      ++off[c];
    }
  }
  return false;
}

// Runs `replicas` independent event trials with per-replica seeds and a
// deterministic, index-ordered reduction.
template <class Event>
WilsonInterval run_trials(int replicas, const Event& event) {
  if (replicas < 1) throw std::invalid_argument("replicas >= 1");
  std::vector<char> hit(replicas, 0);
  parallel_for(static_cast<std::size_t>(replicas),
               [&](std::size_t r) { hit[r] = event(r) ? 1 : 0; });
  std::size_t k = 0;
  for (char h : hit) k += h;
  return wilson(k, static_cast<std::size_t>(replicas));
}

}  // namespace

double DensitySpec::lipschitz_const() const {
  switch (family) {
    case DensityFamily::uniform_cube: return 1.0;
    case DensityFamily::affine: return spectral_norm(A, dim);
    case DensityFamily::sine_warp: return 1.0 + 2.0 * std::numbers::pi * amplitude;
  }
  return 1.0;
}

double DensitySpec::sup_density() const {
  switch (family) {
    case DensityFamily::uniform_cube: return 1.0;
    case DensityFamily::affine: return 1.0 / std::abs(det_and_lu(A, dim));
    case DensityFamily::sine_warp:
      return std::pow(1.0 - 2.0 * std::numbers::pi * amplitude, -static_cast<double>(dim));
  }
  return 1.0;
}

void DensitySpec::validate() const {
  if (dim < 1) throw std::invalid_argument("density: dim >= 1");
  if (family == DensityFamily::affine) {
    if (A.size() != static_cast<std::size_t>(dim) * dim || b.size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("density: affine map needs a dim x dim matrix and a dim shift");
    if (det_and_lu(A, dim) == 0.0)
      throw std::invalid_argument("density: affine matrix must be invertible");
  }
  if (family == DensityFamily::sine_warp) {
    if (!(amplitude >= 0.0) || !(amplitude < 1.0 / (2.0 * std::numbers::pi)))
      throw std::invalid_argument("density: sine-warp amplitude must lie in [0, 1/(2 pi))");
  }
}

DensitySpec DensitySpec::uniform(int d) {
  DensitySpec s;
  s.family = DensityFamily::uniform_cube;
  s.dim = d;
  s.validate();
  return s;
}

DensitySpec DensitySpec::affine_map(int d, std::vector<double> a, std::vector<double> shift) {
  DensitySpec s;
  s.family = DensityFamily::affine;
  s.dim = d;
  s.A = std::move(a);
  s.b = std::move(shift);
  s.validate();
  return s;
}

DensitySpec DensitySpec::sine(int d, double a) {
  DensitySpec s;
  s.family = DensityFamily::sine_warp;
  s.dim = d;
  s.amplitude = a;
  s.validate();
  return s;
}

ParticleConfig sample_config(const DensitySpec& density, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sample_config: n >= 2");
  density.validate();
  const int d = density.dim;
  ParticleConfig cfg;
  cfg.dim = d;
  cfg.n = n;
  cfg.positions.resize(n * d);
  std::mt19937_64 rng = make_rng(seed, n);
  std::vector<double> u(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) u[c] = uniform01(rng);
    double* x = cfg.point(i);
    switch (density.family) {
      case DensityFamily::uniform_cube:
        for (int c = 0; c < d; ++c) x[c] = u[c];
        break;
      case DensityFamily::affine:
        for (int r = 0; r < d; ++r) {
          double s = density.b[r];
          for (int c = 0; c < d; ++c) s += density.A[r * d + c] * u[c];
          x[r] = s;
        }
        break;
      case DensityFamily::sine_warp:
        for (int c = 0; c < d; ++c)
          x[c] = u[c] + density.amplitude *
                            std::sin(2.0 * std::numbers::pi * u[(c + 1) % d]);
        break;
    }
  }
  return cfg;
}

WilsonInterval wilson(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw std::invalid_argument("wilson: trials >= 1");
  WilsonInterval w;
  w.successes = successes;
  w.trials = trials;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  w.estimate = phat;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = phat + z2 / (2.0 * n);
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
  w.lo = successes == 0 ? 0.0 : std::max(0.0, (center - half) / denom);
  w.hi = successes == trials ? 1.0 : std::min(1.0, (center + half) / denom);
  return w;
}

ProbEstimate estimate_dmin_tail(const DensitySpec& density, std::size_t n, double l,
                                int replicas, std::uint64_t seed) {
  if (!(l > 0.0)) throw std::invalid_argument("estimate_dmin_tail: L > 0");
  const int d = density.dim;
  ProbEstimate out;
  out.threshold = std::pow(static_cast<double>(n), -2.0 / d) / l;
  out.interval = run_trials(replicas, [&](std::size_t r) {
    ParticleConfig cfg = sample_config(density, n, derive_seed(seed, kTagDmin, r));
    return ball_event(cfg, out.threshold, 1);
  });
  out.mean_statistic = out.interval.estimate;
  out.bound = std::pow(l, -static_cast<double>(d));
  return out;
}

ProbEstimate estimate_dmin1_tail(const DensitySpec& density, std::size_t n, double l,
                                 int replicas, std::uint64_t seed) {
  if (!(l > 0.0)) throw std::invalid_argument("estimate_dmin1_tail: L > 0");
  const int d = density.dim;
  ProbEstimate out;
  out.threshold = std::pow(static_cast<double>(n), -1.5 / d) / l;
  out.interval = run_trials(replicas, [&](std::size_t r) {
    ParticleConfig cfg = sample_config(density, n, derive_seed(seed, kTagDmin1, r));
    return ball_event(cfg, out.threshold, 2);
  });
  out.mean_statistic = out.interval.estimate;
  out.bound = std::pow(l, -2.0 * d);
  return out;
}

bool triple_event_detect(const ParticleConfig& config, double beta, double eps,
                         double delta) {
  if (!(delta > 0.0) || config.n < 3) return false;
  const std::size_t n = config.n;
  const double invn = 1.0 / static_cast<double>(n);
  const double cutoff = std::pow(static_cast<double>(n), -eps);
  auto pairs = neighbor_index(config, delta);
  if (pairs.empty()) return false;
  // lazy three-nearest scan, memoized per particle touched by a close pair
  std::unordered_map<std::size_t, std::array<std::pair<double, std::size_t>, 3>> cache;
  auto three_nearest = [&](std::size_t i) {
    auto it = cache.find(i);
    if (it != cache.end()) return it->second;
    std::array<std::pair<double, std::size_t>, 3> best{
        std::pair{pos_inf(), i}, std::pair{pos_inf(), i}, std::pair{pos_inf(), i}};
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double r = config.dist(i, j);
      if (r < best[0].first) {
        best[2] = best[1];
        best[1] = best[0];
        best[0] = {r, j};
      } else if (r < best[1].first) {
        best[2] = best[1];
        best[1] = {r, j};
      } else if (r < best[2].first) {
        best[2] = {r, j};
      }
    }
    cache.emplace(i, best);
    return best;
  };
  auto check = [&](std::size_t i, std::size_t k, double d_ik) {
    auto best = three_nearest(i);
    int used = 0;
    for (int q = 0; q < 3 && used < 2; ++q) {
      if (best[q].second == k || !std::isfinite(best[q].first)) continue;
      ++used;
      if (invn / best[q].first * std::pow(d_ik, -beta) >= cutoff) return true;
    }
    return false;
  };
  for (auto [i, k] : pairs) {
    double d_ik = config.dist(i, k);
    if (!(d_ik < delta)) continue;  // strict inequality
    if (check(i, k, d_ik) || check(k, i, d_ik)) return true;
  }
  return false;
}

bool triple_event_brute_force(const ParticleConfig& config, double beta, double eps,
                              double delta) {
  const std::size_t n = config.n;
  if (!(delta > 0.0) || n < 3) return false;
  const double invn = 1.0 / static_cast<double>(n);
  const double cutoff = std::pow(static_cast<double>(n), -eps);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      double d_ik = config.dist(i, k);
      if (!(d_ik < delta)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || j == k) continue;
        if (invn / config.dist(i, j) * std::pow(d_ik, -beta) >= cutoff) return true;
      }
    }
  return false;
}

ProbEstimate estimate_triple_event(const DensitySpec& density, std::size_t n, double beta,
                                   double eps, double delta, int replicas,
                                   std::uint64_t seed) {
  if (!(beta > 0.0)) throw std::invalid_argument("estimate_triple_event: beta > 0");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("estimate_triple_event: eps in (0,1)");
  if (delta < 0.0) throw std::invalid_argument("estimate_triple_event: delta >= 0");
  const double d = static_cast<double>(density.dim);
  const double nn = static_cast<double>(n);
  ProbEstimate out;
  out.threshold = delta;
  out.interval = run_trials(replicas, [&](std::size_t r) {
    ParticleConfig cfg = sample_config(density, n, derive_seed(seed, kTagTriple, r));
    return triple_event_detect(cfg, beta, eps, delta);
  });
  out.mean_statistic = out.interval.estimate;
  double regime;
  if (beta < 1.0)
    regime = std::pow(delta, d * (1.0 - beta));
  else if (beta == 1.0)
    regime = std::log(nn) + std::abs(std::log(delta));
  else
    regime = std::pow(nn, (-2.0 / d - eps) * d * (1.0 - beta));
  out.bound = std::pow(nn, -d * eps) + std::pow(nn, 3.0 - d * (1.0 - eps)) * regime;
  return out;
}

ProbEstimate estimate_close_pairs_tail(const DensitySpec& density, std::size_t n,
                                       double delta, double theta, int replicas,
                                       std::uint64_t seed) {
  if (!(theta > 0.0 && theta < 1.0))
    throw std::invalid_argument("estimate_close_pairs_tail: theta in (0,1)");
  if (delta < 0.0) throw std::invalid_argument("estimate_close_pairs_tail: delta >= 0");
  if (replicas < 1) throw std::invalid_argument("estimate_close_pairs_tail: replicas >= 1");
  const double d = static_cast<double>(density.dim);
  const double nn = static_cast<double>(n);
  ProbEstimate out;
  out.threshold = delta * std::pow(nn, -1.0 / d);
  std::vector<char> hit(replicas, 0);
  std::vector<double> frac(replicas, 0.0);
  parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    ParticleConfig cfg = sample_config(density, n, derive_seed(seed, kTagClose, r));
    std::size_t count = 0;
    if (out.threshold > 0.0) {
      std::vector<char> close(n, 0);
      for (auto [i, j] : neighbor_index(cfg, out.threshold)) {
        close[i] = 1;
        close[j] = 1;
      }
      for (char c : close) count += c;
    }
    frac[r] = static_cast<double>(count) / nn;
    hit[r] = static_cast<double>(count) >= 2.0 * theta * nn ? 1 : 0;
  });
  std::size_t k = 0;
  double mean = 0.0;
  for (int r = 0; r < replicas; ++r) {
    k += hit[r];
    mean += frac[r];
  }
  out.interval = wilson(k, static_cast<std::size_t>(replicas));
  out.mean_statistic = mean / replicas;
  // exponential tail bound with unit constant
  double base = (std::pow(std::pow(delta, d) * (1.0 - theta) / theta, theta)) / (1.0 - theta);
  out.bound = 2.0 * std::pow(base, nn);
  return out;
}

ScalingStudy wasserstein_scaling_study(const DensitySpec& density, double p,
                                       const std::vector<std::size_t>& n_list, int replicas,
                                       int reference_factor, std::uint64_t seed) {
  if (n_list.size() < 2)
    throw std::invalid_argument("wasserstein_scaling_study: need >= 2 sizes");
  if (replicas < 1 || reference_factor < 2)
    throw std::invalid_argument("wasserstein_scaling_study: replicas >= 1, factor >= 2");
  ScalingStudy out;
  out.n_list = n_list;
  for (std::size_t q = 0; q < n_list.size(); ++q) {
    const std::size_t n = n_list[q];
    std::vector<double> vals(replicas, 0.0), floors(replicas, 0.0);
    parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
      ParticleConfig cfg = sample_config(density, n, derive_seed(seed, kTagScaling, n, 2 * r));
      ParticleConfig ref = sample_config(density, n * reference_factor,
                                         derive_seed(seed, kTagScaling, n, 2 * r + 1));
      ReferenceEstimate w =
          wasserstein_vs_reference(config_to_cloud(cfg), config_to_cloud(ref), p, 3,
                                   derive_seed(seed, kTagScaling, n, 1000 + r));
      vals[r] = w.value;
      floors[r] = w.floor;
    });
    std::sort(vals.begin(), vals.end());
    double med = replicas % 2 == 1
                     ? vals[replicas / 2]
                     : 0.5 * (vals[replicas / 2 - 1] + vals[replicas / 2]);
    out.medians.push_back(med);
    out.floors.push_back(floors[0]);
  }
  // least squares of log median against log N
  const std::size_t k = n_list.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t q = 0; q < k; ++q) {
    double x = std::log(static_cast<double>(n_list[q]));
    double y = std::log(out.medians[q]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  double denom = k * sxx - sx * sx;
  out.slope = (k * sxy - sx * sy) / denom;
  double intercept = (sy - out.slope * sx) / k;
  double ssr = 0.0;
  for (std::size_t q = 0; q < k; ++q) {
    double x = std::log(static_cast<double>(n_list[q]));
    double res = std::log(out.medians[q]) - (intercept + out.slope * x);
    out.residuals.push_back(res);
    ssr += res * res;
  }
  if (k > 2) out.slope_stderr = std::sqrt(ssr / (k - 2) / (sxx - sx * sx / k));
  return out;
}

std::vector<std::string> regime_warnings(int d, double alpha, double p) {
  std::vector<std::string> w;
  double amax = std::min((2.0 * d - 3.0) / 3.0, (d - 1.0) / 2.0);
  if (!(alpha < amax))
    w.push_back("alpha = " + std::to_string(alpha) +
                " is outside the i.i.d. high-probability regime alpha < " +
                std::to_string(amax) + " for d = " + std::to_string(d) +
                "; hypothesis satisfaction need not tend to 1");
  double den = 2.0 * d - 3.0 * (alpha + 1.0);
  if (den <= 0.0) {
    w.push_back("no admissible p: 2d - 3(alpha+1) <= 0 for d = " + std::to_string(d) +
                ", alpha = " + std::to_string(alpha));
  } else {
    double pmin = d * (alpha + 1.0) / den;
    if (!(p > pmin))
      w.push_back("p = " + std::to_string(p) + " does not exceed the threshold d(alpha+1)/(2d-3(alpha+1)) = " +
                  std::to_string(pmin) + "; the initial-data statistic need not vanish");
  }
  return w;
}

AssumptionsProbability assumptions_probability(const DensitySpec& density, double alpha,
                                               double p, double eps,
                                               const std::vector<std::size_t>& n_list,
                                               int replicas,
                                               const VerifierThresholds& thresholds,
                                               int reference_factor, std::uint64_t seed) {
  if (replicas < 1) throw std::invalid_argument("assumptions_probability: replicas >= 1");
  if (reference_factor < 2)
    throw std::invalid_argument("assumptions_probability: reference_factor >= 2");
  const int d = density.dim;
  KernelSpec kernel = power_law(d, alpha, true);
  AssumptionsProbability out;
  out.warnings = regime_warnings(d, alpha, p);
  for (std::size_t n : n_list) {
    const double delta_n = select_delta(n, d, eps);
    std::vector<std::array<char, 7>> flags(replicas);
    parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
      ParticleConfig cfg = sample_config(density, n, derive_seed(seed, kTagAssume, n, 2 * r));
      ParticleConfig ref = sample_config(density, n * reference_factor,
                                         derive_seed(seed, kTagAssume, n, 2 * r + 1));
      VerifierThresholds th = thresholds;
      th.seed = derive_seed(seed, kTagAssume, n, 1000000 + r);
      AssumptionReport rep =
          check_assumptions(cfg, config_to_cloud(ref), kernel, delta_n, p, th);
      flags[r] = {static_cast<char>(rep.all_pass()),
                  static_cast<char>(rep.delta_le_dmin1),
                  static_cast<char>(rep.conv_pass),
                  static_cast<char>(rep.wp_pass),
                  static_cast<char>(rep.cond_strong1.pass),
                  static_cast<char>(rep.cond_strong2.pass),
                  static_cast<char>(rep.cond_absorbable.pass)};
    });
    std::array<std::size_t, 7> tally{};
    for (auto& f : flags)
      for (int q = 0; q < 7; ++q) tally[q] += f[q];
    ConditionBreakdown row;
    row.n = n;
    const std::size_t rr = static_cast<std::size_t>(replicas);
    row.all = wilson(tally[0], rr);
    row.delta_le_dmin1 = wilson(tally[1], rr);
    row.conv = wilson(tally[2], rr);
    row.wp = wilson(tally[3], rr);
    row.strong1 = wilson(tally[4], rr);
    row.strong2 = wilson(tally[5], rr);
    row.absorbable = wilson(tally[6], rr);
    out.per_n.push_back(row);
  }
  return out;
}

}  // namespace mfl
