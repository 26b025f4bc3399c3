#include "mfl/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mfl/rng.hpp"

namespace mfl {

void KernelSpec::eval(const double* x, double* out) const {
  const int d = dim;
  double r2 = 0.0;
  for (int c = 0; c < d; ++c) r2 += x[c] * x[c];
  if (r2 == 0.0 || family == KernelFamily::Zero) {
    for (int c = 0; c < d; ++c) out[c] = 0.0;
    return;
  }
  switch (family) {
    case KernelFamily::PowerLaw: {
      double factor;
      if (eps > 0.0 && r2 < eps * eps) {
        // (|x|/eps) K(eps x/|x|) = sign * eps^{-(alpha+1)} * x
        factor = sign * scale * std::pow(eps, -(alpha + 1.0));
      } else {
        factor = sign * scale * std::pow(r2, -0.5 * (alpha + 1.0));
      }
      for (int c = 0; c < d; ++c) out[c] = factor * x[c];
      return;
    }
    case KernelFamily::OseenGravity: {
      const double inv8pi = 1.0 / (8.0 * std::numbers::pi);
      double xg = 0.0;
      for (int c = 0; c < 3; ++c) xg += x[c] * g[c];
      double r = std::sqrt(r2);
      double a;  // prefactor of (g + x (x.g)/r^2)
      if (eps > 0.0 && r < eps) {
        a = scale * inv8pi * r / (eps * eps);
      } else {
        a = scale * inv8pi / r;
      }
      const double b = a * xg / r2;
      for (int c = 0; c < 3; ++c) out[c] = a * g[c] + b * x[c];
      return;
    }
    case KernelFamily::Zero:
      return;  // handled above
  }
}

std::vector<double> KernelSpec::operator()(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != dim)
    throw std::invalid_argument("kernel eval: point has dimension " +
                                std::to_string(x.size()) + ", kernel expects " +
                                std::to_string(dim));
  std::vector<double> out(dim);
  eval(x.data(), out.data());
  return out;
}

KernelSpec zero_kernel(int dim) {
  KernelSpec k;
  k.family = KernelFamily::Zero;
  k.dim = dim;
  k.alpha = 0.0;
  k.c_k_hint = 0.0;
  return k;
}

KernelSpec power_law(int dim, double alpha, bool repulsive) {
  if (dim < 2) throw std::invalid_argument("power_law: dim must be >= 2");
  if (!(alpha > 0.0 && alpha < dim - 1))
    throw std::invalid_argument("power_law: alpha must lie in the open interval (0, d-1)");
  KernelSpec k;
  k.family = KernelFamily::PowerLaw;
  k.dim = dim;
  k.alpha = alpha;
  k.sign = repulsive ? 1.0 : -1.0;
  // |K| = r^{-alpha}, |x||grad K|_F <= (1 + sqrt(1+alpha^2)) r^{-alpha}
  k.c_k_hint = 2.0 + alpha;
  return k;
}

KernelSpec oseen_gravity(const std::array<double, 3>& g) {
  KernelSpec k;
  k.family = KernelFamily::OseenGravity;
  k.dim = 3;
  k.alpha = 1.0;
  k.g = g;
  double gn = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
  k.c_k_hint = gn / std::numbers::pi;
  return k;
}

KernelSpec mollify(const KernelSpec& k, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("mollify: eps must be > 0");
  KernelSpec out = k;
  out.eps = std::max(k.eps, eps);
  return out;
}

KernelSpec scaled(const KernelSpec& k, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("scaled: c must be > 0");
  KernelSpec out = k;
  out.scale = k.scale * c;
  out.c_k_hint = k.c_k_hint * c;
  return out;
}

PointSampler shell_sampler(int dim, double r_min, double r_max) {
  if (!(r_min > 0.0) || r_max < r_min)
    throw std::invalid_argument("shell_sampler: need 0 < r_min <= r_max");
  return [dim, r_min, r_max](std::mt19937_64& rng, double* out) {
    // Gaussian direction, uniform radius on [r_min, r_max].
    std::normal_distribution<double> gauss(0.0, 1.0);
    double n2 = 0.0;
    for (int c = 0; c < dim; ++c) {
      out[c] = gauss(rng);
      n2 += out[c] * out[c];
    }
    if (n2 == 0.0) {
      out[0] = 1.0;
      n2 = 1.0;
    }
    double r = r_min + (r_max - r_min) * uniform01(rng);
    double s = r / std::sqrt(n2);
    for (int c = 0; c < dim; ++c) out[c] *= s;
  };
}

NonAttractiveReport check_nonattractive(const KernelSpec& k, const PointSampler& sampler,
                                        std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("check_nonattractive: n_samples >= 1");
  const int d = k.dim;
  std::mt19937_64 rng = make_rng(seed, 0xA11CE);
  std::vector<double> x(d), mx(d), kx(d), kmx(d);
  NonAttractiveReport rep;
  rep.worst_point.assign(d, 0.0);
  for (std::size_t s = 0; s < n_samples; ++s) {
    sampler(rng, x.data());
    for (int c = 0; c < d; ++c) mx[c] = -x[c];
    k.eval(x.data(), kx.data());
    k.eval(mx.data(), kmx.data());
    double dot = 0.0;
    for (int c = 0; c < d; ++c) dot += (kx[c] - kmx[c]) * x[c];
    double viol = dot < 0.0 ? -dot : 0.0;
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_point = x;
    }
  }
  return rep;
}

CAlphaReport check_c_alpha(const KernelSpec& k, const PointSampler& sampler,
                           std::size_t n_samples, double fd_step_rel, std::uint64_t seed) {
  if (!(fd_step_rel > 0.0)) throw std::invalid_argument("check_c_alpha: fd_step_rel > 0");
  const int d = k.dim;
  std::mt19937_64 rng = make_rng(seed, 0xCA1FA);
  std::vector<double> x(d), xp(d), xm(d), kp(d), km(d), kx(d);
  CAlphaReport rep;
  for (std::size_t s = 0; s < n_samples; ++s) {
    sampler(rng, x.data());
    double r2 = 0.0;
    for (int c = 0; c < d; ++c) r2 += x[c] * x[c];
    double r = std::sqrt(r2);
    double h = fd_step_rel * r;
    if (r < 10.0 * h) {
      ++rep.skipped;
      continue;
    }
    k.eval(x.data(), kx.data());
    double knorm2 = 0.0;
    for (int c = 0; c < d; ++c) knorm2 += kx[c] * kx[c];
    double grad_f2 = 0.0;  // Frobenius norm^2 of the Jacobian
    double div = 0.0;
    for (int j = 0; j < d; ++j) {
      xp = x;
      xm = x;
      xp[j] += h;
      xm[j] -= h;
      k.eval(xp.data(), kp.data());
      k.eval(xm.data(), km.data());
      for (int i = 0; i < d; ++i) {
        double dji = (kp[i] - km[i]) / (2.0 * h);
        grad_f2 += dji * dji;
        if (i == j) div += dji;
      }
    }
    double ra = std::pow(r, k.alpha);
    double est = ra * std::sqrt(knorm2) + ra * r * std::sqrt(grad_f2);
    if (est > rep.c_k_estimate) rep.c_k_estimate = est;
    if (std::abs(div) > rep.max_div) rep.max_div = std::abs(div);
  }
  return rep;
}

}  // namespace mfl
