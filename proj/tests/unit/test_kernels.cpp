#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>

#include "mfl/kernels.hpp"
#include "mfl/rng.hpp"

using namespace mfl;

TEST_SUITE_BEGIN("kernels");

TEST_CASE("power-law evaluation matches hand values") {
  KernelSpec k = power_law(3, 1.0);
  CHECK(k({1.0, 0.0, 0.0}) == std::vector<double>{1.0, 0.0, 0.0});
  auto v = k({0.0, 2.0, 0.0});
  CHECK(v[0] == 0.0);
  CHECK(v[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(v[2] == 0.0);
  // d = 2, alpha = 1/2: |K(x)| = |x|^{-1/2}
  KernelSpec h = power_law(2, 0.5);
  auto w = h({4.0, 0.0});
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w[1] == 0.0);
}

TEST_CASE("oseen evaluation matches hand value") {
  KernelSpec k = oseen_gravity({0.0, 0.0, -1.0});
  auto v = k({1.0, 0.0, 0.0});
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(v[1] == doctest::Approx(0.0));
  CHECK(v[2] == doctest::Approx(-1.0 / (8.0 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("every family maps the origin to zero") {
  for (const KernelSpec& k :
       {power_law(3, 1.0), oseen_gravity({1.0, 2.0, 3.0}), zero_kernel(3),
        mollify(power_law(3, 0.5), 0.3)}) {
    auto v = k({0.0, 0.0, 0.0});
    CHECK(v == std::vector<double>{0.0, 0.0, 0.0});
  }
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(power_law(2, 0.5)({1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("alpha outside (0, d-1) is rejected") {
  CHECK_THROWS_AS(power_law(2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(power_law(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(power_law(3, 2.0), std::invalid_argument);
}

TEST_CASE("non-attractiveness certificates") {
  auto sampler = shell_sampler(2, 0.5, 2.0);
  CHECK(check_nonattractive(power_law(2, 0.7), sampler, 2000).max_violation == 0.0);
  auto s3 = shell_sampler(3, 0.5, 2.0);
  CHECK(check_nonattractive(oseen_gravity({0.0, 0.0, -1.0}), s3, 2000).max_violation == 0.0);
  // attractive negative control on the unit sphere: violation 2|x|^{1-a} = 2
  auto unit = shell_sampler(2, 1.0, 1.0);
  auto rep = check_nonattractive(power_law(2, 0.5, false), unit, 500);
  CHECK(rep.max_violation == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("structural-constant estimate and divergence-free check") {
  auto sampler = shell_sampler(2, 0.5, 2.0);
  auto rep = check_c_alpha(power_law(2, 0.7), sampler, 2000, 1e-4);
  CHECK(rep.c_k_estimate >= 1.0);
  CHECK(rep.c_k_estimate <= 4.0);
  // div(x |x|^{-a-1}) = (d - a - 1) |x|^{-a-1}; the sup over the shell sits at r_min
  double div_bound = 0.3 * std::pow(0.5, -1.7);
  CHECK(rep.max_div <= div_bound * (1.0 + 1e-3));
  CHECK(rep.max_div > 0.5 * div_bound);

  auto s3 = shell_sampler(3, 0.5, 2.0);
  auto oseen = check_c_alpha(oseen_gravity({0.0, 0.0, -1.0}), s3, 2000, 1e-4);
  CHECK(oseen.max_div <= 1e-6);

  auto zero = check_c_alpha(zero_kernel(2), sampler, 100, 1e-4);
  CHECK(zero.c_k_estimate == 0.0);
  CHECK(zero.max_div == 0.0);
}

TEST_CASE("finite-difference estimate converges as the step shrinks") {
  auto sampler = shell_sampler(2, 0.5, 2.0);
  double a = check_c_alpha(power_law(2, 0.7), sampler, 500, 1e-4).c_k_estimate;
  double b = check_c_alpha(power_law(2, 0.7), sampler, 500, 5e-5).c_k_estimate;
  CHECK(std::abs(a - b) / b < 0.01);
}

TEST_CASE("mollification values") {
  KernelSpec k = mollify(power_law(2, 0.5), 1.0);
  auto v = k({0.5, 0.0});
  CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(v[1] == 0.0);
  // at |x| = eps the taper meets the raw kernel
  KernelSpec raw = power_law(2, 0.8);
  KernelSpec mol = mollify(raw, 0.7);
  std::vector<double> x{0.7, 0.0};
  CHECK(mol(x)[0] == doctest::Approx(raw(x)[0]).epsilon(1e-14));
  CHECK_THROWS_AS(mollify(raw, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mollify(raw, -1.0), std::invalid_argument);
}

TEST_CASE("mollified kernel is bounded by the boundary value inside the ball") {
  KernelSpec raw = power_law(2, 0.9);
  double eps = 0.4;
  KernelSpec mol = mollify(raw, eps);
  double boundary = std::pow(eps, -0.9);  // |K(y)| on |y| = eps
  std::mt19937_64 rng = make_rng(7);
  auto sampler = shell_sampler(2, 1e-6, eps);
  std::vector<double> x(2), v(2);
  for (int s = 0; s < 2000; ++s) {
    sampler(rng, x.data());
    mol.eval(x.data(), v.data());
    CHECK(std::hypot(v[0], v[1]) <= boundary * (1.0 + 1e-12));
  }
}

TEST_CASE("exact antisymmetry and evenness on random points") {
  std::mt19937_64 rng = make_rng(3);
  KernelSpec pl = power_law(3, 1.3);
  KernelSpec os = oseen_gravity({0.2, -0.4, 1.0});
  auto sampler = shell_sampler(3, 0.1, 5.0);
  std::vector<double> x(3), mx(3);
  for (int s = 0; s < 1000; ++s) {
    sampler(rng, x.data());
    for (int c = 0; c < 3; ++c) mx[c] = -x[c];
    auto a = pl(x), b = pl(mx);
    auto e = os(x), f = os(mx);
    for (int c = 0; c < 3; ++c) {
      CHECK(a[c] == doctest::Approx(-b[c]).epsilon(1e-14));
      CHECK(e[c] == doctest::Approx(f[c]).epsilon(1e-14));
    }
  }
}

TEST_CASE("repulsive pair work identity (K(x)-K(-x)).x = 2|x|^{1-a}") {
  std::mt19937_64 rng = make_rng(11);
  double alpha = 0.6;
  KernelSpec k = power_law(2, alpha);
  auto sampler = shell_sampler(2, 0.2, 3.0);
  std::vector<double> x(2), mx(2);
  for (int s = 0; s < 500; ++s) {
    sampler(rng, x.data());
    mx = {-x[0], -x[1]};
    auto a = k(x), b = k(mx);
    double dot = (a[0] - b[0]) * x[0] + (a[1] - b[1]) * x[1];
    double r = std::hypot(x[0], x[1]);
    CHECK(dot == doctest::Approx(2.0 * std::pow(r, 1.0 - alpha)).epsilon(1e-12));
  }
}

TEST_SUITE_END();
