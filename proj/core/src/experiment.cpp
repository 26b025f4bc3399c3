#include "mfl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mfl/numformat.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

using nlohmann::json;

// ---- parsing helpers -------------------------------------------------------

void expect_keys(const json& obj, const std::string& context,
                 const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw SpecError("unknown key \"" + it.key() + "\" in " + context);
}

double as_double(const json& v, const std::string& name) {
  if (!v.is_number()) throw SpecError("\"" + name + "\" must be a number");
  return v.get<double>();
}

double as_p(const json& v) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return pos_inf();
    throw SpecError("\"p\" must be a number >= 1 or \"inf\"");
  }
  return as_double(v, "p");
}

std::size_t as_count(const json& v, const std::string& name) {
  if (!v.is_number_unsigned() && !v.is_number_integer())
    throw SpecError("\"" + name + "\" must be a nonnegative integer");
  long long x = v.get<long long>();
  if (x < 0) throw SpecError("\"" + name + "\" must be a nonnegative integer");
  return static_cast<std::size_t>(x);
}

KernelSpec parse_kernel(const json& k) {
  expect_keys(k, "kernel", {"family", "dim", "alpha", "repulsive", "scale", "eps", "g"});
  if (!k.contains("family")) throw SpecError("kernel: missing \"family\"");
  std::string fam = k.at("family").get<std::string>();
  int dim = k.contains("dim") ? static_cast<int>(as_count(k.at("dim"), "kernel.dim")) : 2;
  KernelSpec spec;
  if (fam == "zero") {
    spec = zero_kernel(dim);
  } else if (fam == "power-law") {
    double alpha = k.contains("alpha") ? as_double(k.at("alpha"), "kernel.alpha") : 0.5;
    bool rep = k.contains("repulsive") ? k.at("repulsive").get<bool>() : true;
    if (!(alpha > 0.0 && alpha < dim - 1.0))
      throw SpecError("kernel.alpha must lie in the open interval (0, " +
                      std::to_string(dim - 1) + ") for d = " + std::to_string(dim));
    spec = power_law(dim, alpha, rep);
  } else if (fam == "oseen-gravity") {
    std::array<double, 3> g{0.0, 0.0, -1.0};
    if (k.contains("g")) {
      auto arr = k.at("g");
      if (!arr.is_array() || arr.size() != 3)
        throw SpecError("kernel.g must be an array of 3 numbers");
      for (int c = 0; c < 3; ++c) g[c] = as_double(arr[c], "kernel.g");
    }
    spec = oseen_gravity(g);
  } else {
    throw SpecError("unknown kernel family \"" + fam + "\"");
  }
  if (k.contains("scale")) spec = scaled(spec, as_double(k.at("scale"), "kernel.scale"));
  if (k.contains("eps")) {
    double e = as_double(k.at("eps"), "kernel.eps");
    if (e > 0.0) spec = mollify(spec, e);
  }
  return spec;
}

DensitySpec parse_density(const json& dj) {
  expect_keys(dj, "density", {"family", "dim", "matrix", "shift", "amplitude"});
  if (!dj.contains("family")) throw SpecError("density: missing \"family\"");
  std::string fam = dj.at("family").get<std::string>();
  int dim = dj.contains("dim") ? static_cast<int>(as_count(dj.at("dim"), "density.dim")) : 2;
  try {
    if (fam == "uniform-cube") return DensitySpec::uniform(dim);
    if (fam == "affine") {
      std::vector<double> a, b;
      if (dj.contains("matrix"))
        for (const auto& v : dj.at("matrix")) a.push_back(as_double(v, "density.matrix"));
      if (dj.contains("shift"))
        for (const auto& v : dj.at("shift")) b.push_back(as_double(v, "density.shift"));
      if (b.empty()) b.assign(dim, 0.0);
      return DensitySpec::affine_map(dim, std::move(a), std::move(b));
    }
    if (fam == "sine-warp") {
      double a = dj.contains("amplitude") ? as_double(dj.at("amplitude"), "density.amplitude")
                                          : 0.05;
      return DensitySpec::sine(dim, a);
    }
  } catch (const std::invalid_argument& e) {
    throw SpecError(e.what());
  }
  throw SpecError("unknown density family \"" + fam + "\"");
}

// ---- serialization helpers -------------------------------------------------

json json_num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json wilson_json(const WilsonInterval& w) {
  return json{{"estimate", json_num(w.estimate)},
              {"lo", json_num(w.lo)},
              {"hi", json_num(w.hi)},
              {"successes", w.successes},
              {"trials", w.trials}};
}

std::string checksum_string(const std::string& content) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(content.data(), content.size())));
  return buf;
}

std::string mode_name(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::simulate: return "simulate";
    case ExperimentMode::verify: return "verify";
    case ExperimentMode::mc_lemma_3_1: return "mc-lemma-3.1";
    case ExperimentMode::mc_lemma_3_2: return "mc-lemma-3.2";
    case ExperimentMode::mc_lemma_3_3: return "mc-lemma-3.3";
    case ExperimentMode::mc_lemma_3_4: return "mc-lemma-3.4";
    case ExperimentMode::mc_lemma_3_5: return "mc-lemma-3.5";
    case ExperimentMode::assumptions_prob: return "assumptions-prob";
    case ExperimentMode::convergence_study: return "convergence-study";
  }
  return "?";
}

json spec_echo(const ExperimentSpec& s) {
  json j;
  j["mode"] = mode_name(s.mode);
  j["seed"] = s.seed;
  j["n"] = s.n;
  j["n_list"] = s.n_list;
  j["p"] = json_num(s.p);
  j["eps"] = json_num(s.eps);
  j["t_final"] = json_num(s.t_final);
  j["replicas"] = s.replicas;
  j["reference_factor"] = s.reference_factor;
  if (s.has_kernel) {
    j["kernel"] = json{{"family", static_cast<int>(s.kernel.family)},
                       {"dim", s.kernel.dim},
                       {"alpha", json_num(s.kernel.alpha)},
                       {"sign", json_num(s.kernel.sign)},
                       {"scale", json_num(s.kernel.scale)},
                       {"eps", json_num(s.kernel.eps)}};
  }
  j["density"] = json{{"family", static_cast<int>(s.density.family)},
                      {"dim", s.density.dim},
                      {"amplitude", json_num(s.density.amplitude)}};
  return j;
}

// Collects outputs and writes the manifest last. All data files are byte
// deterministic; only the manifest's wall-clock field varies between runs.
class OutputWriter {
 public:
  OutputWriter(std::string dir, const ExperimentSpec& spec) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    spec_hash_ = checksum_string(spec_echo(spec).dump());
    start_ = std::chrono::steady_clock::now();
  }

  std::string write(const std::string& name, const std::string& content) {
    std::string path = (std::filesystem::path(dir_) / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    files_.emplace_back(name, checksum_string(content));
    paths_.push_back(path);
    return path;
  }

  std::string finish() {
    json manifest;
    manifest["artifact_version"] = "0.1.0";
    manifest["spec_hash"] = spec_hash_;
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json outs = json::object();
    for (auto& [name, sum] : files_) outs[name] = sum;
    manifest["outputs"] = outs;
    std::string path = (std::filesystem::path(dir_) / "manifest.json").string();
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump(2) << "\n";
    paths_.push_back(path);
    return path;
  }

  const std::vector<std::string>& paths() const { return paths_; }

 private:
  std::string dir_;
  std::string spec_hash_;
  std::vector<std::pair<std::string, std::string>> files_;
  std::vector<std::string> paths_;
  std::chrono::steady_clock::time_point start_;
};

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream out;
  const int d = traj.configs.empty() ? 0 : traj.configs.front().dim;
  out << "t,i";
  for (int c = 0; c < d; ++c) out << ",x" << c;
  out << "\n";
  for (std::size_t k = 0; k < traj.configs.size(); ++k) {
    const ParticleConfig& cfg = traj.configs[k];
    for (std::size_t i = 0; i < cfg.n; ++i) {
      out << fmt_double(traj.sample_times[k]) << "," << i;
      for (int c = 0; c < d; ++c) out << "," << fmt_double(cfg.point(i)[c]);
      out << "\n";
    }
  }
  return out.str();
}

std::string diagnostics_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "t,d_min,d_min1,close_mass\n";
  for (std::size_t k = 0; k < traj.diagnostics.size(); ++k) {
    const DistanceReport& r = traj.diagnostics[k];
    out << fmt_double(traj.sample_times[k]) << "," << fmt_double(r.d_min) << ","
        << fmt_double(r.d_min1) << "," << fmt_double(r.close_mass) << "\n";
  }
  return out.str();
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

double bbox_diameter(const ParticleConfig& cfg) {
  const int d = cfg.dim;
  std::vector<double> lo(d, pos_inf()), hi(d, -pos_inf());
  for (std::size_t i = 0; i < cfg.n; ++i)
    for (int c = 0; c < d; ++c) {
      lo[c] = std::min(lo[c], cfg.point(i)[c]);
      hi[c] = std::max(hi[c], cfg.point(i)[c]);
    }
  double s = 0.0;
  for (int c = 0; c < d; ++c) s += (hi[c] - lo[c]) * (hi[c] - lo[c]);
  return std::sqrt(s);
}

std::vector<std::size_t> sizes_of(const ExperimentSpec& spec) {
  if (!spec.n_list.empty()) return spec.n_list;
  return {spec.n};
}

// Least-squares slope of log estimate against log N over rows with positive
// estimates; 0 when underdetermined.
double fit_exponent(const std::vector<MCRow>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t k = 0;
  for (const auto& r : rows) {
    double e = r.estimate.interval.estimate;
    if (!(e > 0.0)) continue;
    double x = std::log(static_cast<double>(r.n)), y = std::log(e);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++k;
  }
  if (k < 2) return 0.0;
  double denom = k * sxx - sx * sx;
  return denom > 0.0 ? (k * sxy - sx * sy) / denom : 0.0;
}

json assumption_json(const AssumptionReport& rep) {
  json j;
  j["delta_n"] = json_num(rep.delta_n);
  j["delta_le_dmin1"] = rep.delta_le_dmin1;
  j["d_min0"] = json_num(rep.d_min0);
  j["d_min1"] = json_num(rep.d_min1);
  j["close_mass"] = json_num(rep.close_mass);
  j["w_p0"] = json_num(rep.w_p0);
  j["w_p_floor"] = json_num(rep.w_p_floor);
  j["cond_conv"] = json{{"value", json_num(rep.cond_conv)}, {"pass", rep.conv_pass}};
  j["cond_wp"] = json{{"value", json_num(rep.cond_wp)}, {"pass", rep.wp_pass}};
  j["cond_strong1"] = json{{"pass", rep.cond_strong1.pass},
                           {"worst_ratio", json_num(rep.cond_strong1.worst_ratio)},
                           {"pairs_checked", rep.cond_strong1.pairs_checked}};
  j["cond_strong2"] = json{{"pass", rep.cond_strong2.pass},
                           {"worst_value", json_num(rep.cond_strong2.worst_value)},
                           {"pairs_checked", rep.cond_strong2.pairs_checked}};
  j["cond_absorbable"] = json{{"pass", rep.cond_absorbable.pass},
                              {"lhs", json_num(rep.cond_absorbable.lhs)},
                              {"rhs", json_num(rep.cond_absorbable.rhs)}};
  j["all_pass"] = rep.all_pass();
  j["thresholds"] = json{{"theta_sep", json_num(rep.thresholds.theta_sep)},
                         {"theta_small", json_num(rep.thresholds.theta_small)},
                         {"conv_cutoff", json_num(rep.thresholds.conv_cutoff)},
                         {"wp_cutoff", json_num(rep.thresholds.wp_cutoff)},
                         {"wp_repeats", rep.thresholds.wp_repeats}};
  return j;
}

}  // namespace

ExperimentSpec parse_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SpecError("spec must be a JSON object");
  expect_keys(doc, "spec",
              {"mode", "seed", "kernel", "density", "n", "n_list", "t_final", "p", "eps",
               "delta_n", "blob_eps", "thresholds", "integrator", "replicas",
               "reference_factor", "mc", "out"});
  if (!doc.contains("mode")) throw SpecError("spec: missing \"mode\"");

  ExperimentSpec spec;
  std::string mode = doc.at("mode").get<std::string>();
  static const std::map<std::string, ExperimentMode> modes = {
      {"simulate", ExperimentMode::simulate},
      {"verify", ExperimentMode::verify},
      {"mc-lemma-3.1", ExperimentMode::mc_lemma_3_1},
      {"mc-lemma-3.2", ExperimentMode::mc_lemma_3_2},
      {"mc-lemma-3.3", ExperimentMode::mc_lemma_3_3},
      {"mc-lemma-3.4", ExperimentMode::mc_lemma_3_4},
      {"mc-lemma-3.5", ExperimentMode::mc_lemma_3_5},
      {"assumptions-prob", ExperimentMode::assumptions_prob},
      {"convergence-study", ExperimentMode::convergence_study}};
  auto mit = modes.find(mode);
  if (mit == modes.end()) throw SpecError("unknown mode \"" + mode + "\"");
  spec.mode = mit->second;

  if (doc.contains("seed")) spec.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("kernel")) {
    spec.kernel = parse_kernel(doc.at("kernel"));
    spec.has_kernel = true;
  }
  if (doc.contains("density")) spec.density = parse_density(doc.at("density"));
  else if (spec.has_kernel) spec.density = DensitySpec::uniform(spec.kernel.dim);
  if (doc.contains("n")) spec.n = as_count(doc.at("n"), "n");
  if (doc.contains("n_list"))
    for (const auto& v : doc.at("n_list")) spec.n_list.push_back(as_count(v, "n_list"));
  if (doc.contains("t_final")) spec.t_final = as_double(doc.at("t_final"), "t_final");
  if (doc.contains("p")) spec.p = as_p(doc.at("p"));
  if (doc.contains("eps")) spec.eps = as_double(doc.at("eps"), "eps");
  if (doc.contains("delta_n")) spec.delta_n_override = as_double(doc.at("delta_n"), "delta_n");
  if (doc.contains("blob_eps")) spec.blob_eps = as_double(doc.at("blob_eps"), "blob_eps");
  if (doc.contains("replicas"))
    spec.replicas = static_cast<int>(as_count(doc.at("replicas"), "replicas"));
  if (doc.contains("reference_factor"))
    spec.reference_factor =
        static_cast<int>(as_count(doc.at("reference_factor"), "reference_factor"));
  if (doc.contains("out")) spec.out_dir = doc.at("out").get<std::string>();

  if (doc.contains("thresholds")) {
    const json& t = doc.at("thresholds");
    expect_keys(t, "thresholds",
                {"theta_sep", "theta_small", "conv_cutoff", "wp_cutoff", "wp_repeats"});
    if (t.contains("theta_sep"))
      spec.thresholds.theta_sep = as_double(t.at("theta_sep"), "theta_sep");
    if (t.contains("theta_small"))
      spec.thresholds.theta_small = as_double(t.at("theta_small"), "theta_small");
    if (t.contains("conv_cutoff"))
      spec.thresholds.conv_cutoff = as_double(t.at("conv_cutoff"), "conv_cutoff");
    if (t.contains("wp_cutoff"))
      spec.thresholds.wp_cutoff = as_double(t.at("wp_cutoff"), "wp_cutoff");
    if (t.contains("wp_repeats"))
      spec.thresholds.wp_repeats = static_cast<int>(as_count(t.at("wp_repeats"), "wp_repeats"));
  }
  if (doc.contains("integrator")) {
    const json& g = doc.at("integrator");
    expect_keys(g, "integrator",
                {"scheme", "dt_max", "eta", "d_floor", "record_every", "fixed_dt"});
    if (g.contains("scheme")) {
      std::string s = g.at("scheme").get<std::string>();
      if (s == "rk4") spec.integrator.scheme = Scheme::rk4;
      else if (s == "heun") spec.integrator.scheme = Scheme::heun;
      else throw SpecError("unknown integrator scheme \"" + s + "\"");
    }
    if (g.contains("dt_max")) spec.integrator.dt_max = as_double(g.at("dt_max"), "dt_max");
    if (g.contains("eta")) spec.integrator.eta = as_double(g.at("eta"), "eta");
    if (g.contains("d_floor")) spec.integrator.d_floor = as_double(g.at("d_floor"), "d_floor");
    if (g.contains("record_every"))
      spec.integrator.record_every = as_double(g.at("record_every"), "record_every");
    if (g.contains("fixed_dt")) spec.integrator.fixed_dt = as_double(g.at("fixed_dt"), "fixed_dt");
  }
  if (doc.contains("mc")) {
    const json& m = doc.at("mc");
    expect_keys(m, "mc", {"l", "beta", "delta", "theta", "eps", "delta_power"});
    if (m.contains("l")) spec.mc.l = as_double(m.at("l"), "mc.l");
    if (m.contains("beta")) spec.mc.beta = as_double(m.at("beta"), "mc.beta");
    if (m.contains("delta")) spec.mc.delta = as_double(m.at("delta"), "mc.delta");
    if (m.contains("theta")) spec.mc.theta = as_double(m.at("theta"), "mc.theta");
    if (m.contains("eps")) spec.mc.eps = as_double(m.at("eps"), "mc.eps");
    if (m.contains("delta_power")) spec.mc.delta_power = as_double(m.at("delta_power"), "mc.delta_power");
  }
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot read spec file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

ValidationResult validate_spec(const ExperimentSpec& spec) {
  ValidationResult v;
  const ExperimentMode m = spec.mode;
  const bool needs_kernel = m == ExperimentMode::simulate || m == ExperimentMode::verify ||
                            m == ExperimentMode::convergence_study;
  const bool needs_sizes = m != ExperimentMode::simulate && m != ExperimentMode::verify;
  if (needs_kernel && !spec.has_kernel)
    v.errors.push_back("mode " + mode_name(m) + " requires a kernel");
  if ((m == ExperimentMode::simulate || m == ExperimentMode::verify) && spec.n < 2)
    v.errors.push_back("mode " + mode_name(m) + " requires n >= 2");
  if (needs_sizes && spec.n_list.empty() && spec.n < 2)
    v.errors.push_back("mode " + mode_name(m) + " requires n or n_list");
  if ((m == ExperimentMode::simulate || m == ExperimentMode::convergence_study) &&
      !(spec.t_final > 0.0))
    v.errors.push_back("mode " + mode_name(m) + " requires t_final > 0");
  if (!(spec.p >= 1.0)) v.errors.push_back("p must satisfy p >= 1 (or \"inf\")");
  if (spec.replicas < 1) v.errors.push_back("replicas must be >= 1");
  if (spec.reference_factor < 2) v.errors.push_back("reference_factor must be >= 2");
  if (spec.has_kernel && spec.density.dim != spec.kernel.dim)
    v.errors.push_back("density dimension does not match kernel dimension");
  if (spec.eps < 0.0) v.errors.push_back("eps must be >= 0");
  if (!(spec.thresholds.theta_sep >= 1.0)) v.errors.push_back("theta_sep must be >= 1");
  if (!(spec.thresholds.theta_small > 0.0 && spec.thresholds.theta_small < 1.0))
    v.errors.push_back("theta_small must lie in (0, 1)");

  if (spec.has_kernel && spec.kernel.family == KernelFamily::PowerLaw &&
      (m == ExperimentMode::verify || m == ExperimentMode::assumptions_prob ||
       m == ExperimentMode::convergence_study)) {
    for (auto& w : regime_warnings(spec.kernel.dim, spec.kernel.alpha, spec.p))
      v.warnings.push_back(w);
  }
  return v;
}

RunResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                         bool strict) {
  RunResult res;
  ValidationResult v = validate_spec(spec);
  for (auto& w : v.warnings) res.messages.push_back("warning: " + w);
  if (!v.ok()) {
    for (auto& e : v.errors) res.messages.push_back("error: " + e);
    res.exit_code = exit_validation;
    return res;
  }
  std::string dir = !out_dir.empty() ? out_dir : (!spec.out_dir.empty() ? spec.out_dir : ".");
  OutputWriter out(dir, spec);
  json report;
  report["spec"] = spec_echo(spec);
  const int d = spec.density.dim;

  switch (spec.mode) {
    case ExperimentMode::simulate: {
      ParticleConfig cfg = sample_config(spec.density, spec.n, spec.seed);
      bool aborted = false;
      Trajectory traj;
      try {
        traj = simulate(cfg, spec.kernel, spec.t_final, spec.integrator);
      } catch (const SimulationAbort& e) {
        traj = e.partial;
        aborted = true;
        res.messages.push_back(std::string("numerical abort: ") + e.what());
      }
      out.write("trajectory.csv", trajectory_csv(traj));
      out.write("diagnostics.csv", diagnostics_csv(traj));
      report["result"] = json{{"aborted", aborted},
                              {"samples", traj.sample_times.size()},
                              {"steps", traj.step_log.size()},
                              {"final_time",
                               json_num(traj.sample_times.empty() ? 0.0
                                                                  : traj.sample_times.back())}};
      if (aborted) res.exit_code = exit_numerical;
      break;
    }

    case ExperimentMode::verify: {
      ParticleConfig cfg = sample_config(spec.density, spec.n, spec.seed);
      ParticleConfig ref = sample_config(spec.density, spec.n * spec.reference_factor,
                                         sub_seed(spec.seed, 0x726566));
      double delta_n = spec.delta_n_override > 0.0 ? spec.delta_n_override
                                                   : select_delta(spec.n, d, spec.eps);
      VerifierThresholds th = spec.thresholds;
      th.seed = sub_seed(spec.seed, 0x77703070);
      AssumptionReport rep =
          check_assumptions(cfg, config_to_cloud(ref), spec.kernel, delta_n, spec.p, th);
      report["assumptions"] = assumption_json(rep);
      if (strict && !rep.all_pass()) {
        res.messages.push_back("strict: hypothesis check failed");
        res.exit_code = exit_strict;
      }
      break;
    }

    case ExperimentMode::mc_lemma_3_1: {
      std::vector<std::size_t> sizes = sizes_of(spec);
      ScalingStudy st = wasserstein_scaling_study(spec.density, spec.p, sizes, spec.replicas,
                                                  spec.reference_factor, spec.seed);
      json rows = json::array();
      std::ostringstream csv;
      csv << "n,median_wp,floor,residual\n";
      for (std::size_t q = 0; q < sizes.size(); ++q) {
        rows.push_back(json{{"n", sizes[q]},
                            {"median_wp", json_num(st.medians[q])},
                            {"floor", json_num(st.floors[q])},
                            {"residual", json_num(st.residuals[q])}});
        csv << sizes[q] << "," << fmt_double(st.medians[q]) << "," << fmt_double(st.floors[q])
            << "," << fmt_double(st.residuals[q]) << "\n";
      }
      out.write("rows.csv", csv.str());
      report["scaling"] = json{{"rows", rows},
                               {"slope", json_num(st.slope)},
                               {"slope_stderr", json_num(st.slope_stderr)}};
      break;
    }

    case ExperimentMode::mc_lemma_3_2:
    case ExperimentMode::mc_lemma_3_3:
    case ExperimentMode::mc_lemma_3_4:
    case ExperimentMode::mc_lemma_3_5: {
      std::vector<MCRow> rows;
      for (std::size_t n : sizes_of(spec)) {
        MCRow row;
        row.n = n;
        double delta = spec.mc.delta;
        if (spec.mc.delta_power != 0.0)
          delta *= std::pow(static_cast<double>(n), spec.mc.delta_power);
        switch (spec.mode) {
          case ExperimentMode::mc_lemma_3_2:
            row.estimate =
                estimate_dmin_tail(spec.density, n, spec.mc.l, spec.replicas, spec.seed);
            break;
          case ExperimentMode::mc_lemma_3_3:
            row.estimate =
                estimate_dmin1_tail(spec.density, n, spec.mc.l, spec.replicas, spec.seed);
            break;
          case ExperimentMode::mc_lemma_3_4:
            row.estimate = estimate_triple_event(spec.density, n, spec.mc.beta, spec.mc.eps,
                                                 delta, spec.replicas, spec.seed);
            break;
          default:
            row.estimate = estimate_close_pairs_tail(spec.density, n, delta, spec.mc.theta,
                                                     spec.replicas, spec.seed);
            break;
        }
        rows.push_back(row);
      }
      json jrows = json::array();
      std::ostringstream csv;
      csv << "n,estimate,lo,hi,threshold,mean_statistic,bound\n";
      for (const auto& r : rows) {
        json jr = wilson_json(r.estimate.interval);
        jr["n"] = r.n;
        jr["threshold"] = json_num(r.estimate.threshold);
        jr["mean_statistic"] = json_num(r.estimate.mean_statistic);
        jr["bound"] = json_num(r.estimate.bound);
        jrows.push_back(jr);
        csv << r.n << "," << fmt_double(r.estimate.interval.estimate) << ","
            << fmt_double(r.estimate.interval.lo) << "," << fmt_double(r.estimate.interval.hi)
            << "," << fmt_double(r.estimate.threshold) << ","
            << fmt_double(r.estimate.mean_statistic) << "," << fmt_double(r.estimate.bound)
            << "\n";
      }
      out.write("rows.csv", csv.str());
      report["estimates"] = json{{"rows", jrows}, {"fitted_exponent", json_num(fit_exponent(rows))}};
      break;
    }

    case ExperimentMode::assumptions_prob: {
      double alpha = spec.has_kernel ? spec.kernel.alpha : 0.5;
      AssumptionsProbability ap = assumptions_probability(
          spec.density, alpha, spec.p, spec.eps, sizes_of(spec), spec.replicas,
          spec.thresholds, spec.reference_factor, spec.seed);
      json jrows = json::array();
      std::ostringstream csv;
      csv << "n,all,delta_le_dmin1,conv,wp,strong1,strong2,absorbable\n";
      for (const auto& row : ap.per_n) {
        jrows.push_back(json{{"n", row.n},
                             {"all", wilson_json(row.all)},
                             {"delta_le_dmin1", wilson_json(row.delta_le_dmin1)},
                             {"conv", wilson_json(row.conv)},
                             {"wp", wilson_json(row.wp)},
                             {"strong1", wilson_json(row.strong1)},
                             {"strong2", wilson_json(row.strong2)},
                             {"absorbable", wilson_json(row.absorbable)}});
        csv << row.n << "," << fmt_double(row.all.estimate) << ","
            << fmt_double(row.delta_le_dmin1.estimate) << "," << fmt_double(row.conv.estimate)
            << "," << fmt_double(row.wp.estimate) << "," << fmt_double(row.strong1.estimate)
            << "," << fmt_double(row.strong2.estimate) << ","
            << fmt_double(row.absorbable.estimate) << "\n";
      }
      out.write("rows.csv", csv.str());
      report["satisfaction"] = json{{"rows", jrows}, {"warnings", ap.warnings}};
      break;
    }

    case ExperimentMode::convergence_study: {
      json jrows = json::array();
      std::ostringstream csv;
      csv << "n,w_p0,sup_wp,sup_margin,fitted_c_dist,fitted_c_wp,penalty\n";
      bool aborted = false;
      for (std::size_t n : sizes_of(spec)) {
        ParticleConfig init = sample_config(spec.density, n, sub_seed(spec.seed, n));
        ParticleConfig ref_init =
            sample_config(spec.density, n * spec.reference_factor,
                          sub_seed(spec.seed, n * 0x5245ULL + 1));
        double blob = spec.blob_eps > 0.0
                          ? spec.blob_eps
                          : default_blob_eps(ref_init.n, d, bbox_diameter(ref_init));
        Trajectory micro, reference;
        try {
          micro = simulate(init, spec.kernel, spec.t_final, spec.integrator);
          reference =
              meanfield_reference(ref_init, spec.kernel, blob, spec.t_final, spec.integrator);
        } catch (const SimulationAbort& e) {
          res.messages.push_back(std::string("numerical abort at n = ") + std::to_string(n) +
                                 ": " + e.what());
          aborted = true;
          break;
        }
        double delta_n = spec.delta_n_override > 0.0 ? spec.delta_n_override
                                                     : select_delta(n, d, spec.eps);
        ConclusionReport conc =
            check_conclusions(micro, reference, spec.p, delta_n,
                              spec.thresholds.wp_repeats, sub_seed(spec.seed, n * 7 + 3));
        double sup_wp = *std::max_element(conc.wp_series.begin(), conc.wp_series.end());
        double sup_margin = *std::max_element(conc.margins.begin(), conc.margins.end());
        jrows.push_back(json{{"n", n},
                             {"w_p0", json_num(conc.w_p0)},
                             {"sup_wp", json_num(sup_wp)},
                             {"sup_margin", json_num(sup_margin)},
                             {"fitted_c_dist", json_num(conc.fitted_c_dist)},
                             {"fitted_c_wp", json_num(conc.fitted_c_wp)},
                             {"penalty", json_num(conc.penalty)},
                             {"blob_eps", json_num(blob)},
                             {"times", conc.times},
                             {"wp_series", conc.wp_series},
                             {"margins", conc.margins}});
        csv << n << "," << fmt_double(conc.w_p0) << "," << fmt_double(sup_wp) << ","
            << fmt_double(sup_margin) << "," << fmt_double(conc.fitted_c_dist) << ","
            << fmt_double(conc.fitted_c_wp) << "," << fmt_double(conc.penalty) << "\n";
      }
      out.write("convergence.csv", csv.str());
      report["convergence"] = json{{"rows", jrows}};
      if (aborted) res.exit_code = exit_numerical;
      break;
    }
  }

  out.write("report.json", report.dump(2) + "\n");
  out.finish();
  res.files = out.paths();
  return res;
}

namespace {

void render_node(const json& node, const std::string& indent, std::ostringstream& out) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      if (it.value().is_object() || (it.value().is_array() && !it.value().empty() &&
                                     it.value().front().is_structured())) {
        out << indent << it.key() << ":\n";
        render_node(it.value(), indent + "  ", out);
      } else {
        out << indent << it.key() << ": " << it.value().dump() << "\n";
      }
    }
  } else if (node.is_array()) {
    std::size_t idx = 0;
    for (const auto& el : node) {
      out << indent << "- [" << idx++ << "]\n";
      render_node(el, indent + "  ", out);
    }
  } else {
    out << indent << node.dump() << "\n";
  }
}

}  // namespace

std::string render_report(const std::string& report_json) {
  json doc;
  try {
    doc = json::parse(report_json);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("report is not valid JSON: ") + e.what());
  }
  std::ostringstream out;
  render_node(doc, "", out);
  return out.str();
}

}  // namespace mfl
