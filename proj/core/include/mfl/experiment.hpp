#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfl/dynamics.hpp"
#include "mfl/kernels.hpp"
#include "mfl/montecarlo.hpp"
#include "mfl/verifier.hpp"

namespace mfl {

enum class ExperimentMode {
  simulate,
  verify,
  mc_lemma_3_1,
  mc_lemma_3_2,
  mc_lemma_3_3,
  mc_lemma_3_4,
  mc_lemma_3_5,
  assumptions_prob,
  convergence_study,
};

// Raised on malformed spec documents (unknown keys, bad types, bad enums).
struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Extra knobs for the Monte Carlo estimator modes.
struct MCParams {
  double l = 2.0;       // tail scale L
  double beta = 0.5;    // triple-event exponent
  double delta = 0.0;   // close-pair radius / triple-event radius
  double theta = 0.1;   // close-pair count fraction
  double eps = 0.02;    // triple-event exponent threshold
  double delta_power = 0.0;  // nonzero: delta is scaled by N^delta_power
};

struct ExperimentSpec {
  ExperimentMode mode = ExperimentMode::simulate;
  std::uint64_t seed = 1;
  KernelSpec kernel = zero_kernel(2);
  bool has_kernel = false;
  DensitySpec density = DensitySpec::uniform(2);
  std::size_t n = 0;
  std::vector<std::size_t> n_list;
  double t_final = 0.0;
  double p = 2.0;  // may be infinity()
  double eps = 0.02;
  double delta_n_override = 0.0;  // > 0 replaces select_delta
  double blob_eps = 0.0;          // > 0 replaces the default blob radius
  VerifierThresholds thresholds;
  IntegratorControls integrator;
  int replicas = 50;
  int reference_factor = 16;
  MCParams mc;
  std::string out_dir;  // optional default output directory
};

// Parses a UTF-8 JSON document; unknown keys are errors (fail-closed).
ExperimentSpec parse_spec(const std::string& json_text);
ExperimentSpec load_spec(const std::string& path);  // reads the file, then parses

struct ValidationResult {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

ValidationResult validate_spec(const ExperimentSpec& spec);

// Exit codes shared between the library and the command line front end.
enum ExitCode : int {
  exit_ok = 0,
  exit_validation = 2,
  exit_numerical = 3,
  exit_strict = 4,
};

struct RunResult {
  int exit_code = exit_ok;
  std::vector<std::string> messages;
  std::vector<std::string> files;  // paths written, manifest last
};

// Executes the experiment and writes its outputs plus a manifest with
// per-file checksums into out_dir (created if absent).
RunResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                         bool strict = false);

// Renders a JSON report document as an indented human-readable table.
std::string render_report(const std::string& report_json);

}  // namespace mfl
