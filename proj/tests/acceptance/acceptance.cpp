// Acceptance gate: each criterion prints its measurements and a final
// "criterion N: PASS|FAIL" line. Usage: acceptance <1..10> [path-to-cli].
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfl/config_stats.hpp"
#include "mfl/dynamics.hpp"
#include "mfl/experiment.hpp"
#include "mfl/kahan.hpp"
#include "mfl/kernels.hpp"
#include "mfl/montecarlo.hpp"
#include "mfl/rng.hpp"
#include "mfl/transport.hpp"
#include "mfl/verifier.hpp"

using namespace mfl;
namespace fs = std::filesystem;

namespace {

bool g_pass = true;

void require(bool ok, const std::string& what) {
  std::cout << "  [" << (ok ? "ok" : "FAIL") << "] " << what << "\n";
  if (!ok) g_pass = false;
}

ParticleConfig random_config(int dim, std::size_t n, std::uint64_t seed) {
  ParticleConfig c;
  c.dim = dim;
  c.n = n;
  c.positions.resize(n * dim);
  auto rng = make_rng(seed);
  for (auto& x : c.positions) x = uniform01(rng);
  return c;
}

PointCloud random_cloud(int dim, std::size_t m, std::uint64_t seed) {
  ParticleConfig c = random_config(dim, m, seed);
  return uniform_cloud(dim, std::move(c.positions));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---- criterion 1: two-body closed form ------------------------------------

void criterion1() {
  for (auto [d, alpha] : {std::pair{2, 0.5}, std::pair{3, 1.0}}) {
    std::vector<double> pos(2 * d, 0.0);
    pos[d] = 1.0;
    ParticleConfig c;
    c.dim = d;
    c.n = 2;
    c.positions = pos;
    IntegratorControls ctl;
    ctl.dt_max = 0.01;
    ctl.record_every = 0.0;
    Trajectory t = simulate(c, power_law(d, alpha), 1.0, ctl);
    double r = t.configs.back().dist(0, 1);
    double exact = two_body_exact(1.0, alpha, 2, 1.0);
    double rel = std::abs(r - exact) / exact;
    std::printf("  d=%d alpha=%.2f: r(T)=%.12f exact=%.12f rel=%.3e\n", d, alpha, r, exact,
                rel);
    require(rel <= 1e-6, "relative error <= 1e-6");
  }
}

// ---- criterion 2: transport solver against the exhaustive oracle ----------

void criterion2() {
  auto rng = make_rng(2002);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    int d = 1 + static_cast<int>(rng() % 3);
    std::size_t m = 2 + rng() % 6;  // <= 7
    PointCloud a = random_cloud(d, m, rng());
    PointCloud b = random_cloud(d, m, rng());
    for (double p : {1.0, 2.0, pos_inf()}) {
      double oracle = brute_force_wasserstein(a, b, p);
      double got = std::isinf(p) ? wasserstein_inf(a, b).value : wasserstein_p(a, b, p).value;
      worst = std::max(worst, std::abs(got - oracle));
    }
  }
  std::printf("  200 instances, p in {1,2,inf}: worst |solver - oracle| = %.3e\n", worst);
  require(worst <= 1e-12, "agreement within 1e-12");
}

// ---- criterion 3: configuration statistics against brute force ------------

void criterion3() {
  auto rng = make_rng(3003);
  int bad = 0;
  for (int inst = 0; inst < 100; ++inst) {
    int d = 1 + static_cast<int>(rng() % 3);
    std::size_t n = 50 + rng() % 451;  // <= 500
    ParticleConfig c = random_config(d, n, rng());
    double delta = 0.01 + 0.1 * uniform01(rng);
    double beta = 0.5 + uniform01(rng);

    DistanceReport rep = distance_report(c, delta);
    double d_min = pos_inf(), d_min1 = pos_inf();
    std::size_t close = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double b1 = pos_inf(), b2 = pos_inf();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double r = c.dist(i, j);
        if (r < b1) {
          b2 = b1;
          b1 = r;
        } else if (r < b2) {
          b2 = r;
        }
      }
      d_min = std::min(d_min, b1);
      d_min1 = std::min(d_min1, b2);
      if (b1 < delta) ++close;
    }
    if (rep.d_min != d_min || rep.d_min1 != d_min1 || rep.close_set.size() != close) ++bad;

    CutoffSums s = cutoff_sum(c, beta, delta);
    for (std::size_t i = 0; i < n; i += 17) {
      KahanSum acc;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double r = c.dist(i, j);
        if (r > delta) acc.add(std::pow(r, -beta));
      }
      if (s.per_particle[i] != acc.value()) ++bad;
    }
  }
  std::printf("  100 configs (N <= 500): %d mismatches\n", bad);
  require(bad == 0, "distance report and cut-off sums match brute force exactly");
}

// ---- criterion 4: minimal-distance tail shape ------------------------------

void criterion4() {
  DensitySpec u = DensitySpec::uniform(2);
  const std::vector<std::size_t> sizes = {250, 1000, 4000};
  const int replicas = 200;
  std::map<double, std::vector<WilsonInterval>> per_l;
  std::map<double, std::pair<std::size_t, std::size_t>> pooled;
  for (double l : {2.0, 4.0}) {
    for (std::size_t n : sizes) {
      ProbEstimate e = estimate_dmin_tail(u, n, l, replicas, 4004);
      per_l[l].push_back(e.interval);
      pooled[l].first += e.interval.successes;
      pooled[l].second += e.interval.trials;
      std::printf("  L=%.0f N=%5zu: estimate=%.3f [%.3f, %.3f]\n", l, n,
                  e.interval.estimate, e.interval.lo, e.interval.hi);
    }
    double max_lo = 0.0, min_hi = 1.0;
    for (const auto& w : per_l[l]) {
      max_lo = std::max(max_lo, w.lo);
      min_hi = std::min(min_hi, w.hi);
    }
    require(max_lo <= min_hi, "estimates agree across N within Wilson intervals");
  }
  WilsonInterval w2 = wilson(pooled[2.0].first, pooled[2.0].second);
  WilsonInterval w4 = wilson(pooled[4.0].first, pooled[4.0].second);
  double ratio = w4.estimate / w2.estimate;
  std::printf("  pooled estimate(L=4)/estimate(L=2) = %.3f (target 1/4)\n", ratio);
  require(ratio >= 0.125 && ratio <= 0.5, "L-doubling ratio in [2^-d/2, 2^-d*2]");
}

// ---- criterion 5: second-nearest distance scaling --------------------------

void criterion5() {
  const int replicas = 100;
  for (int d : {2, 3}) {
    DensitySpec u = DensitySpec::uniform(d);
    std::vector<double> scaled;
    for (std::size_t n : {250, 1000, 4000}) {
      std::vector<double> vals;
      for (int r = 0; r < replicas; ++r) {
        ParticleConfig cfg =
            sample_config(u, n, splitmix64(5005 + r) ^ splitmix64(n * 31 + d));
        vals.push_back(distance_report(cfg, 0.0).d_min1);
      }
      std::sort(vals.begin(), vals.end());
      double med = vals[vals.size() / 2];
      double s = med * std::pow(static_cast<double>(n), 1.5 / d);
      scaled.push_back(s);
      std::printf("  d=%d N=%5zu: median d_min1 = %.5e, scaled = %.4f\n", d, n, med, s);
    }
    double lo = *std::min_element(scaled.begin(), scaled.end());
    double hi = *std::max_element(scaled.begin(), scaled.end());
    std::printf("  d=%d band ratio = %.3f\n", d, hi / lo);
    require(hi / lo <= 4.0, "scaled medians lie in a band of width <= 4x");
  }
}

// ---- criterion 6: the convergence statement at desk scale ------------------

void criterion6() {
  const int d = 2;
  const double alpha = 0.3;
  KernelSpec kernel = power_law(d, alpha);
  IntegratorControls ctl;
  ctl.scheme = Scheme::heun;
  ctl.dt_max = 0.1;
  ctl.record_every = 0.25;

  struct Row {
    std::size_t n;
    double c_dist, sup_margin, sup_wp, floor;
  };
  std::vector<Row> rows;
  DensitySpec u = DensitySpec::uniform(d);
  for (std::size_t n : {std::size_t{512}, std::size_t{2048}}) {
    ParticleConfig init = sample_config(u, n, 600 + n);
    ParticleConfig ref_init = sample_config(u, 16 * n, 6000 + n);
    double blob = default_blob_eps(ref_init.n, d, std::sqrt(2.0));
    Trajectory micro = simulate(init, kernel, 1.0, ctl);
    Trajectory reference = meanfield_reference(ref_init, kernel, blob, 1.0, ctl);
    double delta_n = select_delta(n, d, 0.02);
    ConclusionReport conc = check_conclusions(micro, reference, 2.0, delta_n, 2, 66);
    Row row;
    row.n = n;
    row.c_dist = conc.fitted_c_dist;
    row.sup_margin = *std::max_element(conc.margins.begin(), conc.margins.end());
    row.sup_wp = *std::max_element(conc.wp_series.begin(), conc.wp_series.end());
    row.floor = conc.wp_floor_series.front();
    rows.push_back(row);
    std::printf("  N=%4zu: fitted_c_dist=%.4f sup_margin=%.3f sup_W2=%.5f floor=%.5f\n", n,
                row.c_dist, row.sup_margin, row.sup_wp, row.floor);
  }
  bool finite = std::isfinite(rows[0].c_dist) && std::isfinite(rows[1].c_dist);
  require(finite, "fitted contraction constants finite");
  double lo = std::min(rows[0].c_dist, rows[1].c_dist);
  double hi = std::max(rows[0].c_dist, rows[1].c_dist);
  // a repulsive system legitimately fits ~0; treat the sub-resolution band as stable
  bool stable = hi <= 0.05 || hi <= 2.0 * lo;
  std::printf("  c_dist range [%.4f, %.4f]\n", lo, hi);
  require(stable, "fitted_c_dist stable within a factor 2 across N");
  require(rows[0].sup_margin <= 1.5 && rows[1].sup_margin <= 1.5,
          "sup W2 within 1.5x of the fitted envelope");
  require(rows[1].sup_wp <= rows[0].sup_wp + rows[1].floor,
          "raw sup-distance nonincreasing in N beyond the reference-cloud floor");
}

// ---- criterion 7: kernel certificates --------------------------------------

void criterion7() {
  auto shell = shell_sampler(3, 0.5, 2.0);
  KernelSpec oseen = oseen_gravity({0.0, 0.0, -1.0});
  NonAttractiveReport na = check_nonattractive(oseen, shell, 100000, 7);
  std::printf("  oseen pair-work violation over 1e5 samples: %.3e\n", na.max_violation);
  require(na.max_violation == 0.0, "oseen non-attractiveness violation exactly 0");

  CAlphaReport ca = check_c_alpha(oseen, shell, 20000, 1e-4, 7);
  std::printf("  oseen max |div K| on the shell: %.3e\n", ca.max_div);
  require(ca.max_div <= 1e-6, "divergence-free within 1e-6");

  // div(x |x|^{-a-1}) = (d - a - 1) |x|^{-a-1}: for d=3, a=1 the sup over the
  // shell is 0.5^{-2} = 4 at the inner radius.
  CAlphaReport pl = check_c_alpha(power_law(3, 1.0), shell, 20000, 1e-4, 7);
  std::printf("  power-law max |div K| on the shell: %.3e\n", pl.max_div);
  require(pl.max_div <= 4.0 * (1.0 + 1e-3), "power-law divergence matches the analytic sup");
  require(pl.max_div > 2.0, "power-law divergence is genuinely nonzero");

  auto shell2 = shell_sampler(2, 0.5, 2.0);
  NonAttractiveReport attr =
      check_nonattractive(power_law(2, 0.5, false), shell2, 10000, 7);
  std::printf("  attractive negative control violation: %.3e\n", attr.max_violation);
  require(attr.max_violation > 0.0, "attractive kernel reports a positive violation");
}

// ---- criterion 8: the cut-off sum bound -------------------------------------

void criterion8() {
  DensitySpec u = DensitySpec::uniform(2);
  const int replicas = 50;
  for (std::size_t n : {std::size_t{500}, std::size_t{2000}}) {
    double worst = 0.0;
    for (int r = 0; r < replicas; ++r) {
      std::uint64_t s = splitmix64(8008) ^ splitmix64(n * 1000 + r);
      ParticleConfig cfg = sample_config(u, n, s);
      PointCloud ref = uniform_cloud(2, sample_config(u, 4 * n, splitmix64(s)).positions);
      double delta = 0.5 * distance_report(cfg, 0.0).d_min1;
      CutoffBoundReport rep = check_lemma21(cfg, ref, 1.3, delta, 2.0, 1.0, 1, s);
      worst = std::max(worst, rep.ratio);
    }
    std::printf("  N=%4zu: worst lhs/rhs over %d replicas = %.4f\n", n, replicas, worst);
    require(worst <= 10.0, "ratio <= 10 in every replica");
  }
}

// ---- criterion 9: hypothesis satisfaction trend -----------------------------

void criterion9() {
  VerifierThresholds th;  // theta_sep = 4, theta_small = 0.25
  th.wp_repeats = 1;
  DensitySpec u3 = DensitySpec::uniform(3);
  struct Point {
    std::size_t n;
    int replicas;
  };
  std::vector<WilsonInterval> all;
  for (Point pt : {Point{500, 40}, Point{2000, 16}, Point{8000, 5}}) {
    AssumptionsProbability ap = assumptions_probability(u3, 0.8, 8.0, 0.02, {pt.n},
                                                        pt.replicas, th, 4, 9009);
    const ConditionBreakdown& row = ap.per_n.front();
    all.push_back(row.all);
    std::printf(
        "  N=%5zu R=%2d: all=%.2f [%.2f,%.2f] delta<=dmin1=%.2f conv=%.2f wp=%.2f "
        "strong1=%.2f strong2=%.2f absorbable=%.2f\n",
        pt.n, pt.replicas, row.all.estimate, row.all.lo, row.all.hi,
        row.delta_le_dmin1.estimate, row.conv.estimate, row.wp.estimate,
        row.strong1.estimate, row.strong2.estimate, row.absorbable.estimate);
  }
  bool trend = true;
  for (std::size_t k = 1; k < all.size(); ++k)
    if (all[k].hi < all[k - 1].lo) trend = false;
  require(trend, "satisfaction fraction nondecreasing in N within Wilson error");

  // negative control: d=2, alpha=0.5 exceeds the d=2 admissible range, and the
  // triple-smallness condition stops holding with probability near 1
  const std::size_t n = 2000;
  const double alpha = 0.5;
  const double delta_n = select_delta(n, 2, 0.02);
  const double invn = 1.0 / static_cast<double>(n);
  int ok_count = 0, replicas = 50;
  DensitySpec u2 = DensitySpec::uniform(2);
  for (int r = 0; r < replicas; ++r) {
    ParticleConfig cfg = sample_config(u2, n, splitmix64(9900 + r));
    NearestThree n3 = nearest_three(cfg);
    double worst = 0.0;
    for (auto [i, k] : neighbor_index(cfg, delta_n)) {
      double d_ik = cfg.dist(i, k);
      if (!(d_ik < delta_n)) continue;
      for (std::size_t a : {i, k}) {
        std::size_t other = a == i ? k : i;
        int used = 0;
        for (int q = 0; q < 3 && used < 2; ++q) {
          if (n3.idx[a][q] == other || !std::isfinite(n3.dist[a][q])) continue;
          ++used;
          worst = std::max(worst, invn / n3.dist[a][q] * std::pow(d_ik, -alpha));
        }
      }
    }
    if (worst <= th.theta_small) ++ok_count;
  }
  double frac = static_cast<double>(ok_count) / replicas;
  std::printf("  negative control d=2 alpha=0.5 N=%zu: strong2 fraction = %.2f\n", n, frac);
  require(frac <= 0.8, "negative-control satisfaction bounded away from 1");
}

// ---- criterion 10: byte determinism through the command line ----------------

int run_cli(const std::string& cli, const std::string& spec, const fs::path& out, int threads) {
  std::string cmd = "\"" + cli + "\" run --spec \"" + spec + "\" --out \"" + out.string() +
                    "\" --threads " + std::to_string(threads) + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

void criterion10(const std::string& cli) {
  fs::path base = fs::temp_directory_path() / "mfl_acceptance_10";
  fs::remove_all(base);
  fs::create_directories(base);

  std::map<std::string, std::string> specs;
  specs["simulate.json"] = R"({
    "mode": "simulate", "seed": 42,
    "kernel": {"family": "power-law", "dim": 2, "alpha": 0.5},
    "n": 64, "t_final": 0.5, "integrator": {"record_every": 0.1}
  })";
  specs["estimate.json"] = R"({
    "mode": "mc-lemma-3.2", "seed": 43, "n_list": [100, 400], "replicas": 64,
    "mc": {"l": 2.0}
  })";

  for (auto& [name, text] : specs) {
    fs::path spec_path = base / name;
    std::ofstream(spec_path) << text;
    fs::path out1 = base / (name + ".t1");
    fs::path out8 = base / (name + ".t8");
    fs::path out1b = base / (name + ".t1b");
    bool ran = run_cli(cli, spec_path.string(), out1, 1) == 0 &&
               run_cli(cli, spec_path.string(), out8, 8) == 0 &&
               run_cli(cli, spec_path.string(), out1b, 1) == 0;
    require(ran, name + ": all runs exit 0");
    if (!ran) continue;

    bool identical = true;
    for (const auto& entry : fs::directory_iterator(out1)) {
      std::string fname = entry.path().filename().string();
      if (fname == "manifest.json") continue;
      if (slurp(out1 / fname) != slurp(out8 / fname) ||
          slurp(out1 / fname) != slurp(out1b / fname))
        identical = false;
    }
    require(identical, name + ": data files byte-identical across reruns and thread counts");

    auto outputs = [&](const fs::path& dir) {
      return nlohmann::json::parse(slurp(dir / "manifest.json")).at("outputs");
    };
    require(outputs(out1) == outputs(out8) && outputs(out1) == outputs(out1b),
            name + ": manifest checksums identical");
  }
  fs::remove_all(base);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <criterion 1..10> [path-to-cli]\n";
    return 2;
  }
  int crit = std::atoi(argv[1]);
  std::printf("criterion %d\n", crit);
  switch (crit) {
    case 1: criterion1(); break;
    case 2: criterion2(); break;
    case 3: criterion3(); break;
    case 4: criterion4(); break;
    case 5: criterion5(); break;
    case 6: criterion6(); break;
    case 7: criterion7(); break;
    case 8: criterion8(); break;
    case 9: criterion9(); break;
    case 10:
      if (argc < 3) {
        std::cerr << "criterion 10 needs the cli binary path\n";
        return 2;
      }
      criterion10(argv[2]);
      break;
    default:
      std::cerr << "unknown criterion\n";
      return 2;
  }
  std::printf("criterion %d: %s\n", crit, g_pass ? "PASS" : "FAIL");
  return g_pass ? 0 : 1;
}
