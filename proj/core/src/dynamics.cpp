#include "mfl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "mfl/kahan.hpp"
#include "mfl/parallel.hpp"

namespace mfl {

namespace {

constexpr int kMaxDim = 8;

struct ForceResult {
  std::vector<double> v;
  double d_min = pos_inf();
};

inline void kadd(double& sum, double& comp, double x) {
  double y = x - comp;
  double t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

// Power-law pair factor; r2 = |x|^2. Returns f with K(x) = f * x.
inline double pl_factor(double r2, double s, double expo, double eps2, double fac_in) {
  if (r2 == 0.0) return 0.0;
  if (r2 < eps2) return fac_in;
  return s * std::pow(r2, expo);
}

// Direct sum with a per-particle compensated accumulator and ascending
// partner order. The single-worker path walks pairs once and uses the exact
// antisymmetry (power-law) or evenness (oseen) of the kernel; both paths are
// bitwise identical because floating negation is exact.
ForceResult force(const ParticleConfig& cfg, const KernelSpec& kernel) {
  const std::size_t n = cfg.n;
  const int d = cfg.dim;
  ForceResult fr;
  fr.v.assign(n * d, 0.0);
  if (kernel.family == KernelFamily::Zero || n < 2) return fr;

  const double s = kernel.sign * kernel.scale;
  const double expo = -0.5 * (kernel.alpha + 1.0);
  const double eps2 = kernel.eps > 0.0 ? kernel.eps * kernel.eps : 0.0;
  const double fac_in =
      kernel.eps > 0.0 ? s * std::pow(kernel.eps, -(kernel.alpha + 1.0)) : 0.0;
  const bool oseen = kernel.family == KernelFamily::OseenGravity;
  const double inv8pi = 1.0 / (8.0 * std::numbers::pi);
  const double osc = kernel.scale * inv8pi;
  const double* G = kernel.g.data();

  const double invn = 1.0 / static_cast<double>(n);
  const double* pos = cfg.positions.data();

  if (worker_count() == 1) {
    std::vector<double> sum(n * d, 0.0), comp(n * d, 0.0);
    double dmin2 = pos_inf();
    double diff[kMaxDim];
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = pos + i * d;
      double* si = sum.data() + i * d;
      double* ci = comp.data() + i * d;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double* xj = pos + j * d;
        double r2 = 0.0;
        for (int c = 0; c < d; ++c) {
          diff[c] = xi[c] - xj[c];
          r2 += diff[c] * diff[c];
        }
        if (r2 < dmin2) dmin2 = r2;
        double* sj = sum.data() + j * d;
        double* cj = comp.data() + j * d;
        if (!oseen) {
          double f = pl_factor(r2, s, expo, eps2, fac_in);
          for (int c = 0; c < d; ++c) {
            double v = f * diff[c];
            kadd(si[c], ci[c], v);
            kadd(sj[c], cj[c], -v);
          }
        } else if (r2 > 0.0) {
          double r = std::sqrt(r2);
          double a = (eps2 > 0.0 && r2 < eps2) ? osc * r / eps2 : osc / r;
          double xg = 0.0;
          for (int c = 0; c < d; ++c) xg += diff[c] * G[c];
          double b = a * xg / r2;
          for (int c = 0; c < d; ++c) {
            double v = a * G[c] + b * diff[c];
            kadd(si[c], ci[c], v);
            kadd(sj[c], cj[c], v);
          }
        }
      }
    }
    for (std::size_t q = 0; q < n * d; ++q) fr.v[q] = sum[q] * invn;
    fr.d_min = std::sqrt(dmin2);
    return fr;
  }

  std::vector<double> chunk_min;
  std::mutex mu;
  parallel_for_chunks(n, 64, [&](std::size_t b, std::size_t e) {
    double dmin2 = pos_inf();
    double diff[kMaxDim];
    double sum[kMaxDim], comp[kMaxDim];
    for (std::size_t i = b; i < e; ++i) {
      const double* xi = pos + i * d;
      for (int c = 0; c < d; ++c) sum[c] = comp[c] = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double* xj = pos + j * d;
        double r2 = 0.0;
        for (int c = 0; c < d; ++c) {
          diff[c] = xi[c] - xj[c];
          r2 += diff[c] * diff[c];
        }
        if (r2 < dmin2) dmin2 = r2;
        if (!oseen) {
          double f = pl_factor(r2, s, expo, eps2, fac_in);
          for (int c = 0; c < d; ++c) kadd(sum[c], comp[c], f * diff[c]);
        } else if (r2 > 0.0) {
          double r = std::sqrt(r2);
          double a = (eps2 > 0.0 && r2 < eps2) ? osc * r / eps2 : osc / r;
          double xg = 0.0;
          for (int c = 0; c < d; ++c) xg += diff[c] * G[c];
          double bb = a * xg / r2;
          for (int c = 0; c < d; ++c) kadd(sum[c], comp[c], a * G[c] + bb * diff[c]);
        }
      }
      for (int c = 0; c < d; ++c) fr.v[i * d + c] = sum[c] * invn;
    }
    std::lock_guard<std::mutex> lock(mu);
    chunk_min.push_back(dmin2);
  });
  double dmin2 = pos_inf();
  for (double m : chunk_min) dmin2 = std::min(dmin2, m);
  fr.d_min = std::sqrt(dmin2);
  return fr;
}

void check_config(const ParticleConfig& cfg, const KernelSpec& kernel, double d_min,
                  double d_floor) {
  if (kernel.family == KernelFamily::Zero) return;
  if (d_min == 0.0 && kernel.singular()) {
    // locate the coincident pair for the error message
    for (std::size_t i = 0; i < cfg.n; ++i)
      for (std::size_t j = i + 1; j < cfg.n; ++j)
        if (cfg.dist(i, j) == 0.0) throw SingularConfigError(i, j);
    throw SingularConfigError(0, 0);
  }
  if (d_floor > 0.0 && d_min <= d_floor) throw BlowUpError(d_min);
}

double dt_rule(double d_min, const ParticleConfig& cfg, const KernelSpec& kernel,
               const IntegratorControls& c) {
  if (c.fixed_dt > 0.0) return c.fixed_dt;
  if (kernel.family == KernelFamily::Zero || kernel.c_k_hint <= 0.0 || !std::isfinite(d_min))
    return c.dt_max;
  double d_eff = std::max(d_min, kernel.eps);
  double dt = c.eta * static_cast<double>(cfg.n) * std::pow(d_eff, kernel.alpha + 1.0) /
              (2.0 * kernel.c_k_hint);
  return std::min(c.dt_max, dt);
}

void axpy(ParticleConfig& out, const ParticleConfig& x, double a, const std::vector<double>& k) {
  const std::size_t q = x.positions.size();
  out = x;
  for (std::size_t i = 0; i < q; ++i) out.positions[i] = x.positions[i] + a * k[i];
}

}  // namespace

std::vector<double> rhs(const ParticleConfig& config, const KernelSpec& kernel) {
  if (kernel.dim != config.dim)
    throw std::invalid_argument("rhs: kernel dimension does not match configuration");
  ForceResult fr = force(config, kernel);
  if (fr.d_min == 0.0 && kernel.singular()) check_config(config, kernel, fr.d_min, 0.0);
  return std::move(fr.v);
}

double adaptive_dt(const ParticleConfig& config, const KernelSpec& kernel,
                   const IntegratorControls& controls) {
  double d_min = pos_inf();
  if (config.n >= 2 && kernel.family != KernelFamily::Zero)
    d_min = distance_report(config, 0.0).d_min;
  if (controls.d_floor > 0.0 && d_min <= controls.d_floor) throw BlowUpError(d_min);
  return dt_rule(d_min, config, kernel, controls);
}

Trajectory simulate(const ParticleConfig& config0, const KernelSpec& kernel, double T,
                    const IntegratorControls& controls) {
  if (kernel.dim != config0.dim)
    throw std::invalid_argument("simulate: kernel dimension does not match configuration");
  if (!(T > config0.time)) throw std::invalid_argument("simulate: need T > start time");

  Trajectory traj;
  traj.kernel = kernel;
  ParticleConfig x = config0;
  const double t0 = config0.time;

  auto record = [&](double t) {
    x.time = t;
    traj.sample_times.push_back(t);
    traj.configs.push_back(x);
    if (x.n >= 2) traj.diagnostics.push_back(distance_report(x, controls.record_delta));
  };

  record(t0);
  double t = t0;
  long next_k = 1;
  try {
    while (t < T) {
      ForceResult k1 = force(x, kernel);
      check_config(x, kernel, k1.d_min, controls.d_floor);
      double dt = dt_rule(k1.d_min, x, kernel, controls);
      double target = T;
      if (controls.record_every > 0.0)
        target = std::min(T, t0 + static_cast<double>(next_k) * controls.record_every);
      bool hit = false;
      if (t + dt >= target) {
        dt = target - t;
        hit = true;
      }

      ParticleConfig tmp;
      if (controls.scheme == Scheme::heun) {
        axpy(tmp, x, dt, k1.v);
        ForceResult k2 = force(tmp, kernel);
        for (std::size_t q = 0; q < x.positions.size(); ++q)
          x.positions[q] += 0.5 * dt * (k1.v[q] + k2.v[q]);
      } else {
        axpy(tmp, x, 0.5 * dt, k1.v);
        ForceResult k2 = force(tmp, kernel);
        axpy(tmp, x, 0.5 * dt, k2.v);
        ForceResult k3 = force(tmp, kernel);
        axpy(tmp, x, dt, k3.v);
        ForceResult k4 = force(tmp, kernel);
        for (std::size_t q = 0; q < x.positions.size(); ++q)
          x.positions[q] +=
              dt / 6.0 * (k1.v[q] + 2.0 * k2.v[q] + 2.0 * k3.v[q] + k4.v[q]);
      }
      traj.step_log.push_back(dt);
      t = hit ? target : t + dt;
      x.time = t;
      if (hit) {
        record(t);
        ++next_k;
      }
    }
  } catch (const SingularConfigError& e) {
    throw SimulationAbort(e.what(), std::move(traj));
  } catch (const BlowUpError& e) {
    throw SimulationAbort(e.what(), std::move(traj));
  }
  return traj;
}

double two_body_exact(double r0, double alpha, int n, double t) {
  if (!(r0 > 0.0) || t < 0.0) throw std::invalid_argument("two_body_exact: need r0 > 0, t >= 0");
  double a1 = alpha + 1.0;
  return std::pow(std::pow(r0, a1) + 2.0 * a1 * t / static_cast<double>(n), 1.0 / a1);
}

double default_blob_eps(std::size_t M, int dim, double diameter) {
  return 0.5 * std::pow(static_cast<double>(M), -1.0 / (dim + 2.0)) * diameter;
}

Trajectory meanfield_reference(const ParticleConfig& init, const KernelSpec& kernel, double eps,
                               double T, const IntegratorControls& controls) {
  return simulate(init, mollify(kernel, eps), T, controls);
}

}  // namespace mfl
