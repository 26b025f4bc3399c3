#include "mfl/config_stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "mfl/kahan.hpp"
#include "mfl/parallel.hpp"
#include "mfl/rng.hpp"

namespace mfl {

double ParticleConfig::dist(std::size_t i, std::size_t j) const {
  const double* a = point(i);
  const double* b = point(j);
  double r2 = 0.0;
  for (int c = 0; c < dim; ++c) {
    double d = a[c] - b[c];
    r2 += d * d;
  }
  return std::sqrt(r2);
}

NearestTwo nearest_two(const ParticleConfig& config) {
  const std::size_t n = config.n;
  if (n < 2) throw std::invalid_argument("nearest_two: need N >= 2");
  NearestTwo out;
  out.dist1.assign(n, pos_inf());
  out.dist2.assign(n, pos_inf());
  out.idx1.assign(n, 0);
  out.idx2.assign(n, 0);
  parallel_for(n, [&](std::size_t i) {
    double d1 = pos_inf(), d2 = pos_inf();
    std::size_t j1 = i, j2 = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = config.dist(i, j);
      if (d < d1) {
        d2 = d1;
        j2 = j1;
        d1 = d;
        j1 = j;
      } else if (d < d2) {
        d2 = d;
        j2 = j;
      }
    }
    out.dist1[i] = d1;
    out.idx1[i] = j1;
    out.dist2[i] = d2;
    out.idx2[i] = j2;
  });
  return out;
}

NearestThree nearest_three(const ParticleConfig& config) {
  const std::size_t n = config.n;
  if (n < 2) throw std::invalid_argument("nearest_three: need N >= 2");
  NearestThree out;
  out.dist.assign(n, {pos_inf(), pos_inf(), pos_inf()});
  out.idx.assign(n, {0, 0, 0});
  parallel_for(n, [&](std::size_t i) {
    std::array<double, 3> d{pos_inf(), pos_inf(), pos_inf()};
    std::array<std::size_t, 3> id{i, i, i};
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double r = config.dist(i, j);
      if (r < d[0]) {
        d[2] = d[1]; id[2] = id[1];
        d[1] = d[0]; id[1] = id[0];
        d[0] = r; id[0] = j;
      } else if (r < d[1]) {
        d[2] = d[1]; id[2] = id[1];
        d[1] = r; id[1] = j;
      } else if (r < d[2]) {
        d[2] = r; id[2] = j;
      }
    }
    out.dist[i] = d;
    out.idx[i] = id;
  });
  return out;
}

DistanceReport distance_report(const ParticleConfig& config, double delta) {
  const std::size_t n = config.n;
  if (n < 2) throw std::invalid_argument("distance_report: need N >= 2");
  if (delta < 0.0) throw std::invalid_argument("distance_report: delta >= 0");
  NearestTwo nt = nearest_two(config);
  DistanceReport rep;
  rep.delta = delta;
  rep.nn_index = std::move(nt.idx1);
  rep.nn_dist = std::move(nt.dist1);
  rep.d_min = pos_inf();
  for (std::size_t i = 0; i < n; ++i) rep.d_min = std::min(rep.d_min, rep.nn_dist[i]);
  if (n == 2) {
    rep.d_min1 = pos_inf();
    rep.d_min1_defined = false;
  } else {
    rep.d_min1 = pos_inf();
    for (std::size_t i = 0; i < n; ++i) rep.d_min1 = std::min(rep.d_min1, nt.dist2[i]);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (rep.nn_dist[i] < delta) rep.close_set.push_back(i);
  rep.close_mass = static_cast<double>(rep.close_set.size()) / static_cast<double>(n);
  return rep;
}

CutoffSums cutoff_sum(const ParticleConfig& config, double beta, double delta) {
  if (!(beta > 0.0)) throw std::invalid_argument("cutoff_sum: beta > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("cutoff_sum: delta > 0");
  const std::size_t n = config.n;
  CutoffSums out;
  out.per_particle.assign(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    KahanSum acc;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = config.dist(i, j);
      if (d > delta) acc.add(std::pow(d, -beta));
    }
    out.per_particle[i] = acc.value();
  });
  out.max = 0.0;
  for (double s : out.per_particle) out.max = std::max(out.max, s);
  return out;
}

namespace {

// Cells hashed by integer coordinates. Hash collisions merge buckets, which
// only costs extra distance checks; candidate pairs are always verified.
std::uint64_t cell_key(const std::vector<long long>& c) {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (long long v : c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
  return h;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> neighbor_index(const ParticleConfig& config,
                                                                double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("neighbor_index: radius > 0");
  const std::size_t n = config.n;
  const int d = config.dim;
  std::vector<double> lo(d, pos_inf());
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) lo[c] = std::min(lo[c], config.point(i)[c]);

  auto cell_of = [&](std::size_t i, std::vector<long long>& cell) {
    for (int c = 0; c < d; ++c)
      cell[c] = static_cast<long long>(std::floor((config.point(i)[c] - lo[c]) / radius));
  };

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  grid.reserve(n * 2);
  std::vector<long long> cell(d);
  for (std::size_t i = 0; i < n; ++i) {
    cell_of(i, cell);
    grid[cell_key(cell)].push_back(i);
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<long long> nb(d);
  const double r2max = radius * radius;
  for (std::size_t i = 0; i < n; ++i) {
    cell_of(i, cell);
    // enumerate the 3^d neighbouring cells
    std::vector<int> off(d, -1);
    for (;;) {
      for (int c = 0; c < d; ++c) nb[c] = cell[c] + off[c];
      auto it = grid.find(cell_key(nb));
      if (it != grid.end()) {
        for (std::size_t j : it->second) {
          if (j <= i) continue;
          double r2 = 0.0;
          for (int c = 0; c < d; ++c) {
            double dd = config.point(i)[c] - config.point(j)[c];
            r2 += dd * dd;
          }
          if (r2 <= r2max) pairs.emplace_back(i, j);
        }
      }
      int c = 0;
      while (c < d && off[c] == 1) off[c++] = -1;
      if (c == d) break;
      ++off[c];
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

std::size_t max_ball_count(const ParticleConfig& config, double delta) {
  std::vector<std::size_t> count(config.n, 1);  // the point itself
  for (auto [i, j] : neighbor_index(config, delta)) {
    ++count[i];
    ++count[j];
  }
  return *std::max_element(count.begin(), count.end());
}

}  // namespace mfl
