#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mfl/config_stats.hpp"
#include "mfl/rng.hpp"

using namespace mfl;

namespace {

ParticleConfig make_config(int dim, std::vector<double> pos) {
  ParticleConfig c;
  c.dim = dim;
  c.n = pos.size() / dim;
  c.positions = std::move(pos);
  return c;
}

ParticleConfig random_config(int dim, std::size_t n, std::uint64_t seed, double span = 1.0) {
  ParticleConfig c;
  c.dim = dim;
  c.n = n;
  c.positions.resize(n * dim);
  auto rng = make_rng(seed);
  for (auto& x : c.positions) x = span * uniform01(rng);
  return c;
}

std::vector<std::pair<std::size_t, std::size_t>> brute_pairs(const ParticleConfig& c,
                                                             double radius) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < c.n; ++i)
    for (std::size_t j = i + 1; j < c.n; ++j)
      if (c.dist(i, j) <= radius) out.emplace_back(i, j);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("config_stats");

TEST_CASE("distance report on the three collinear points") {
  ParticleConfig c = make_config(2, {0, 0, 1, 0, 3, 0});
  DistanceReport r = distance_report(c, 1.5);
  CHECK(r.d_min == 1.0);
  CHECK(r.nn_index == std::vector<std::size_t>{1, 0, 1});
  CHECK(r.d_min1 == 2.0);
  CHECK(r.d_min1_defined);
  CHECK(r.close_set == std::vector<std::size_t>{0, 1});
  CHECK(r.close_mass == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("two points give d_min1 = +inf with flag") {
  ParticleConfig c = make_config(2, {0, 0, 0.25, 0});
  DistanceReport r = distance_report(c, 1.0);
  CHECK(r.d_min == 0.25);
  CHECK(std::isinf(r.d_min1));
  CHECK_FALSE(r.d_min1_defined);
}

TEST_CASE("coincident points do not divide by zero") {
  ParticleConfig c = make_config(3, {0, 0, 0, 0, 0, 0, 1, 1, 1});
  DistanceReport r = distance_report(c, 0.0);
  CHECK(r.d_min == 0.0);
  CHECK(r.d_min1 == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("fewer than two points is rejected") {
  ParticleConfig c = make_config(2, {0, 0});
  CHECK_THROWS_AS(distance_report(c, 0.1), std::invalid_argument);
}

TEST_CASE("cut-off sums on hand fixtures") {
  ParticleConfig c = make_config(2, {0, 0, 1, 0, 3, 0});
  CutoffSums s = cutoff_sum(c, 1.0, 1.5);
  REQUIRE(s.per_particle.size() == 3);
  CHECK(s.per_particle[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(s.per_particle[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.per_particle[2] == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(s.max == doctest::Approx(5.0 / 6.0).epsilon(1e-15));

  CHECK(cutoff_sum(c, 1.0, 10.0).max == 0.0);

  ParticleConfig two = make_config(2, {0, 0, 2, 0});
  CHECK(cutoff_sum(two, 2.0, 1.0).max == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("neighbor index on hand fixtures") {
  ParticleConfig c = make_config(2, {0, 0, 1, 0, 3, 0});
  using P = std::pair<std::size_t, std::size_t>;
  CHECK(neighbor_index(c, 1.2) == std::vector<P>{{0, 1}});
  CHECK(neighbor_index(c, 3.5).size() == 3);
  CHECK(neighbor_index(c, 0.5).empty());
}

TEST_CASE("neighbor index equals brute force on random configs") {
  for (int d : {1, 2, 3}) {
    for (int trial = 0; trial < 12; ++trial) {
      ParticleConfig c = random_config(d, 180, 100 * d + trial);
      for (double radius : {0.03, 0.1, 0.4}) {
        CHECK(neighbor_index(c, radius) == brute_pairs(c, radius));
      }
    }
  }
}

TEST_CASE("cut-off sum equals ascending-order brute force bitwise") {
  ParticleConfig c = random_config(2, 400, 42);
  CutoffSums s = cutoff_sum(c, 1.3, 0.05);
  for (std::size_t i = 0; i < c.n; i += 37) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t j = 0; j < c.n; ++j) {
      if (j == i) continue;
      double dd = c.dist(i, j);
      if (dd > 0.05) {
        double y = std::pow(dd, -1.3) - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
      }
    }
    CHECK(s.per_particle[i] == sum);
  }
}

TEST_CASE("monotonicity in delta") {
  ParticleConfig c = random_config(2, 200, 5);
  CHECK(cutoff_sum(c, 1.1, 0.02).max >= cutoff_sum(c, 1.1, 0.08).max);
  DistanceReport a = distance_report(c, 0.02), b = distance_report(c, 0.08);
  CHECK(a.close_set.size() <= b.close_set.size());
  CHECK(std::includes(b.close_set.begin(), b.close_set.end(), a.close_set.begin(),
                      a.close_set.end()));
}

TEST_CASE("permutation invariance of the scalar statistics") {
  ParticleConfig c = random_config(3, 150, 9);
  ParticleConfig perm = c;
  std::vector<std::size_t> idx(c.n);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(10);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t i = 0; i < c.n; ++i)
    for (int k = 0; k < 3; ++k) perm.positions[i * 3 + k] = c.positions[idx[i] * 3 + k];
  DistanceReport a = distance_report(c, 0.1), b = distance_report(perm, 0.1);
  CHECK(a.d_min == b.d_min);
  CHECK(a.d_min1 == b.d_min1);
  CHECK(a.close_mass == b.close_mass);
  CHECK(cutoff_sum(c, 1.2, 0.05).max == doctest::Approx(cutoff_sum(perm, 1.2, 0.05).max)
                                            .epsilon(1e-13));
}

TEST_CASE("scaling law of distances and sums") {
  ParticleConfig c = random_config(2, 120, 17);
  const double lam = 2.5, beta = 1.4, delta = 0.06;
  ParticleConfig scaled = c;
  for (auto& x : scaled.positions) x *= lam;
  CHECK(distance_report(scaled, 0.0).d_min ==
        doctest::Approx(lam * distance_report(c, 0.0).d_min).epsilon(1e-14));
  CHECK(cutoff_sum(scaled, beta, lam * delta).max ==
        doctest::Approx(std::pow(lam, -beta) * cutoff_sum(c, beta, delta).max)
            .epsilon(1e-12));
}

TEST_CASE("three smallest distances agree with the two smallest") {
  ParticleConfig c = random_config(2, 80, 23);
  NearestTwo n2 = nearest_two(c);
  NearestThree n3 = nearest_three(c);
  for (std::size_t i = 0; i < c.n; ++i) {
    CHECK(n3.dist[i][0] == n2.dist1[i]);
    CHECK(n3.idx[i][0] == n2.idx1[i]);
    CHECK(n3.dist[i][1] == n2.dist2[i]);
    CHECK(n3.idx[i][1] == n2.idx2[i]);
    CHECK(n3.dist[i][1] <= n3.dist[i][2]);
  }
}

TEST_CASE("ball count includes the point itself") {
  ParticleConfig c = make_config(2, {0, 0, 0.5, 0, 10, 0});
  CHECK(max_ball_count(c, 1.0) == 2);
  CHECK(max_ball_count(c, 0.1) == 1);
  CHECK(max_ball_count(c, 20.0) == 3);
}

TEST_SUITE_END();
