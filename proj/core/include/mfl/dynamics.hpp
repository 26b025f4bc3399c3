#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mfl/config_stats.hpp"
#include "mfl/kernels.hpp"

namespace mfl {

enum class Scheme { rk4, heun };

struct IntegratorControls {
  Scheme scheme = Scheme::rk4;
  double dt_max = 0.01;
  double eta = 0.1;          // safety factor in (0,1)
  double d_floor = 0.0;      // abort when d_min falls to or below this
  double record_every = 0.1; // <= 0: record only endpoints
  double record_delta = 0.0; // delta used for the per-sample close set
  double fixed_dt = 0.0;     // > 0 bypasses the adaptive step rule (testing)
};

// Time-sampled configurations with per-sample distance diagnostics.
struct Trajectory {
  KernelSpec kernel;
  std::vector<double> sample_times;
  std::vector<ParticleConfig> configs;
  std::vector<DistanceReport> diagnostics;
  std::vector<double> step_log;  // accepted dt sequence
};

// Coincident pair under a non-mollified singular kernel.
struct SingularConfigError : std::runtime_error {
  std::size_t i, j;
  SingularConfigError(std::size_t i_, std::size_t j_)
      : std::runtime_error("singular configuration: particles " + std::to_string(i_) + " and " +
                           std::to_string(j_) + " coincide under a singular kernel"),
        i(i_), j(j_) {}
};

// d_min reached the configured floor; integration aborts rather than clamps.
struct BlowUpError : std::runtime_error {
  double d_min;
  explicit BlowUpError(double d)
      : std::runtime_error("configuration too close for the requested tolerance (d_min = " +
                           std::to_string(d) + ")"),
        d_min(d) {}
};

// Abort wrapper carrying the trajectory recorded up to the failure.
struct SimulationAbort : std::runtime_error {
  Trajectory partial;
  SimulationAbort(const std::string& what, Trajectory t)
      : std::runtime_error(what), partial(std::move(t)) {}
};

// v_i = (1/N) sum_{j != i} K(X_i - X_j); direct O(N^2) sum, fixed ascending
// partner order with compensated accumulation. Bitwise identical for any
// worker count.
std::vector<double> rhs(const ParticleConfig& config, const KernelSpec& kernel);

// dt = min(dt_max, eta N d_min^{alpha+1} / (2 C_K)): the closest pair moves
// at most ~eta * d_min per step. For mollified kernels d_min is floored at
// the mollification radius, below which the pair speed no longer grows.
double adaptive_dt(const ParticleConfig& config, const KernelSpec& kernel,
                   const IntegratorControls& controls);

Trajectory simulate(const ParticleConfig& config0, const KernelSpec& kernel, double T,
                    const IntegratorControls& controls);

// Closed-form pair distance for the repulsive power-law two-body problem:
// (r0^{alpha+1} + 2(alpha+1)t/n)^{1/(alpha+1)}.
double two_body_exact(double r0, double alpha, int n, double t);

// Blob-method balance between smoothing bias and sampling variance.
double default_blob_eps(std::size_t M, int dim, double diameter);

// Self-consistent mollified blob system for the limit equation: the cloud
// init (M i.i.d. samples of rho^0) is advanced under K_eps = mollify(kernel,
// eps); the transported cloud is the surrogate for rho(t).
Trajectory meanfield_reference(const ParticleConfig& init, const KernelSpec& kernel, double eps,
                               double T, const IntegratorControls& controls);

}  // namespace mfl
