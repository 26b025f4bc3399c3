#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace mfl {

enum class KernelFamily { Zero, PowerLaw, OseenGravity };

// Interaction kernel K : R^d -> R^d with singularity exponent alpha.
// Mollification and scalar rescaling are stored flat: eps > 0 replaces K
// inside the ball B_eps by the linear radial taper (|x|/eps) K(eps x/|x|),
// which keeps the direction field, continuity at the boundary, and the
// sign of (K(x)-K(-x)).x. K(0) = 0 for every family.
struct KernelSpec {
  KernelFamily family = KernelFamily::Zero;
  int dim = 2;
  double alpha = 0.0;           // singularity exponent
  double sign = 1.0;            // +1 repulsive, -1 attractive (power-law only)
  double scale = 1.0;           // scalar prefactor
  double eps = 0.0;             // mollification radius, 0 = raw kernel
  std::array<double, 3> g{0.0, 0.0, 0.0};  // oseen-gravity drive vector
  double c_k_hint = 0.0;        // analytic bound for |x|^a|K| + |x|^{a+1}|grad K|

  bool singular() const { return family != KernelFamily::Zero && eps == 0.0; }
  bool antisymmetric() const { return family != KernelFamily::OseenGravity; }

  // Evaluates K(x) into out (both length dim). No dimension check: hot path.
  void eval(const double* x, double* out) const;
  // Checked evaluation.
  std::vector<double> operator()(const std::vector<double>& x) const;
};

KernelSpec zero_kernel(int dim);
// K(x) = sign * x / |x|^{alpha+1}; repulsive = +1.
KernelSpec power_law(int dim, double alpha, bool repulsive = true);
// K(x) = Phi(x) g with the Oseen tensor Phi; d = 3, alpha = 1.
KernelSpec oseen_gravity(const std::array<double, 3>& g);
KernelSpec mollify(const KernelSpec& k, double eps);
KernelSpec scaled(const KernelSpec& k, double c);

// Draws points from a point sampler, typically uniform on a spherical shell.
using PointSampler = std::function<void(std::mt19937_64&, double*)>;
PointSampler shell_sampler(int dim, double r_min, double r_max);

struct NonAttractiveReport {
  double max_violation = 0.0;           // max over samples of max(0, -(K(x)-K(-x)).x)
  std::vector<double> worst_point;
};

NonAttractiveReport check_nonattractive(const KernelSpec& k, const PointSampler& sampler,
                                        std::size_t n_samples, std::uint64_t seed = 0);

struct CAlphaReport {
  double c_k_estimate = 0.0;  // max of |x|^a |K(x)| + |x|^{a+1} |grad K(x)|_F
  double max_div = 0.0;       // max |div K| over samples
  std::size_t skipped = 0;    // samples too close to the origin for the FD step
};

// Gradient and divergence by central finite differences with step
// h = fd_step_rel * |x| (relative stepping handles the |x|^{-alpha-1} scale).
CAlphaReport check_c_alpha(const KernelSpec& k, const PointSampler& sampler,
                           std::size_t n_samples, double fd_step_rel = 1e-4,
                           std::uint64_t seed = 0);

}  // namespace mfl
