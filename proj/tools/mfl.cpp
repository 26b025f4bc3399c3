// Command line front end: runs, validates, and renders experiment specs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mfl/experiment.hpp"
#include "mfl/parallel.hpp"

namespace {

int cmd_run(const std::string& spec_path, int threads, bool strict,
            const std::string& out_dir, bool has_seed, std::uint64_t seed) {
  mfl::set_worker_count(threads);
  mfl::ExperimentSpec spec;
  try {
    spec = mfl::load_spec(spec_path);
  } catch (const mfl::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mfl::exit_validation;
  }
  if (has_seed) spec.seed = seed;
  mfl::RunResult res = mfl::run_experiment(spec, out_dir, strict);
  for (const auto& m : res.messages) std::cerr << m << "\n";
  for (const auto& f : res.files) std::cout << f << "\n";
  return res.exit_code;
}

int cmd_validate(const std::string& spec_path) {
  mfl::ExperimentSpec spec;
  try {
    spec = mfl::load_spec(spec_path);
  } catch (const mfl::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mfl::exit_validation;
  }
  mfl::ValidationResult v = mfl::validate_spec(spec);
  for (const auto& w : v.warnings) std::cout << "warning: " << w << "\n";
  for (const auto& e : v.errors) std::cout << "error: " << e << "\n";
  if (v.ok() && v.warnings.empty()) std::cout << "ok\n";
  return v.ok() ? mfl::exit_ok : mfl::exit_validation;
}

int cmd_report(const std::string& report_path) {
  std::ifstream in(report_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << report_path << "\n";
    return mfl::exit_validation;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    std::cout << mfl::render_report(buf.str());
  } catch (const mfl::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mfl::exit_validation;
  }
  return mfl::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field particle laboratory"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, report_path;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  bool strict = false;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "execute an experiment spec");
  run->add_option("--spec", spec_path, "path to the JSON experiment spec")->required();
  run->add_option("--threads", threads, "worker count (default: hardware parallelism)");
  run->add_flag("--strict", strict, "exit 4 when a hard check fails");
  run->add_option("--out", out_dir, "output directory (overrides the spec)");
  auto* seed_opt = run->add_option("--seed", seed, "seed override");

  auto* validate = app.add_subcommand("validate", "check a spec without running it");
  validate->add_option("--spec", spec_path, "path to the JSON experiment spec")->required();

  auto* report = app.add_subcommand("report", "render a JSON report as text");
  report->add_option("--spec", report_path, "path to the JSON report")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return cmd_run(spec_path, threads, strict, out_dir, seed_opt->count() > 0, seed);
  if (validate->parsed()) return cmd_validate(spec_path);
  return cmd_report(report_path);
}
