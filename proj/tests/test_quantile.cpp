#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ecr/quantile.hpp"
#include "ecr/rng.hpp"

using namespace ecr;

namespace {

// independent sort-based oracle for inf{t : #{v <= t}/n >= q}
double sort_oracle(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::max<std::size_t>(rank, 1);
  return v[rank - 1];
}

std::vector<double> random_vector(SplitMix64& rng, int max_n) {
  const int n = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(max_n));
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = 20.0 * rng.uniform() - 10.0;
  return v;
}

}  // namespace

TEST_CASE("empirical quantile matches the spec examples") {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(empirical_quantile(v, 0.9 * 10.0 / 9.0).finite_value() == 9.0);

  std::vector<double> single{5};
  CHECK(empirical_quantile(single, 1.0).finite_value() == 5.0);

  std::vector<double> four{1, 2, 3, 4};
  CHECK(empirical_quantile(four, 0.9 * 5.0 / 4.0).is_infinite());
}

TEST_CASE("empirical quantile rejects bad input") {
  std::vector<double> v{1.0};
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(empirical_quantile(v, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(empirical_quantile(v, -0.3), std::invalid_argument);
  std::vector<double> bad{1.0, std::nan("")};
  CHECK_THROWS_AS(empirical_quantile(bad, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(QuantileValue::infinite().finite_value(), std::logic_error);
}

TEST_CASE("empirical quantile equals the sort oracle on random vectors") {
  SplitMix64 rng(20240601);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::vector<double> v = random_vector(rng, 50);
    const double q = rng.uniform_open();
    CHECK(empirical_quantile(v, q).finite_value() == sort_oracle(v, q));
  }
}

TEST_CASE("empirical quantile is nondecreasing in the level") {
  SplitMix64 rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const std::vector<double> v = random_vector(rng, 30);
    double prev = -1e300;
    for (double q = 0.05; q <= 1.0; q += 0.05) {
      const double cur = empirical_quantile(v, q).finite_value();
      CHECK(cur >= prev);
      prev = cur;
    }
  }
}

TEST_CASE("pinball loss formula and domain") {
  CHECK(pinball_loss(0.0, 0.3) == 0.0);
  CHECK(pinball_loss(1.0, 0.9) == doctest::Approx(0.9));
  CHECK(pinball_loss(-1.0, 0.9) == doctest::Approx(0.1));
  CHECK_THROWS_AS(pinball_loss(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pinball_loss(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("pinball loss is convex in the residual") {
  SplitMix64 rng(99);
  for (int rep = 0; rep < 500; ++rep) {
    const double u = 10.0 * rng.uniform() - 5.0;
    const double v = 10.0 * rng.uniform() - 5.0;
    const double lam = rng.uniform();
    const double q = rng.uniform_open() * 0.98 + 0.01;
    const double mix = pinball_loss(lam * u + (1 - lam) * v, q);
    CHECK(mix <= lam * pinball_loss(u, q) + (1 - lam) * pinball_loss(v, q) + 1e-12);
  }
}

TEST_CASE("smoothing kernel boundary and midpoint values") {
  const SmoothingKernel k(0.1);
  CHECK(gamma_smooth(-0.1, k) == 1.0);
  CHECK(gamma_smooth(0.1, k) == 0.0);
  CHECK(gamma_smooth(0.0, k) == doctest::Approx(0.5));
  CHECK(gamma_smooth(0.05, k) == doctest::Approx(53.0 / 512.0));  // quintic at eps/2
  CHECK(gamma_smooth(-5.0, k) == 1.0);
  CHECK(gamma_smooth(5.0, k) == 0.0);
  CHECK_THROWS_AS(SmoothingKernel(0.0), std::invalid_argument);
  CHECK_THROWS_AS(SmoothingKernel(-1.0), std::invalid_argument);
}

TEST_CASE("kernel derivative values and window") {
  const SmoothingKernel k(0.1);
  CHECK(gamma_smooth_derivative(0.1, k) == 0.0);
  CHECK(gamma_smooth_derivative(-0.1, k) == 0.0);
  CHECK(gamma_smooth_derivative(0.0, k) == doctest::Approx(-9.375));
  // the derivative integrates to -1 over the window (step from 1 to 0)
  const int n = 20000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = -0.1 + 0.2 * (i + 0.5) / n;
    acc += gamma_smooth_derivative(z, k) * (0.2 / n);
  }
  CHECK(acc == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("kernel matches numeric integration of its derivative") {
  const SmoothingKernel k(0.25);
  // composite Simpson of gamma' from -eps to z, plus 1
  auto integral = [&](double z) {
    const int steps = 2000;
    const double h = (z + k.epsilon) / steps;
    double acc = gamma_smooth_derivative(-k.epsilon, k) + gamma_smooth_derivative(z, k);
    for (int i = 1; i < steps; ++i) {
      acc += (i % 2 ? 4.0 : 2.0) * gamma_smooth_derivative(-k.epsilon + i * h, k);
    }
    return 1.0 + acc * h / 3.0;
  };
  for (double z = -0.25; z <= 0.2501; z += 0.025) {
    CHECK(gamma_smooth(z, k) == doctest::Approx(integral(z)).epsilon(1e-8));
  }
}

TEST_CASE("smoothed cdf saturation and midpoint") {
  const SmoothingKernel k(0.1);
  std::vector<double> s{0.0};
  CHECK(smoothed_cdf(s, 0.0, k) == doctest::Approx(0.5));
  std::vector<double> v{1.0, 2.0, 3.5};
  CHECK(smoothed_cdf(v, 3.6, k) == 1.0);
  CHECK(smoothed_cdf(v, 0.9, k) == 0.0);
  CHECK_THROWS_AS(smoothed_cdf({}, 0.0, k), std::invalid_argument);
}

TEST_CASE("smoothed cdf is nondecreasing in t and permutation invariant") {
  const SmoothingKernel k(0.05);
  SplitMix64 rng(4242);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v = random_vector(rng, 40);
    double prev = -1.0;
    for (double t = -11.0; t <= 11.0; t += 0.25) {
      const double cur = smoothed_cdf(v, t, k);
      CHECK(cur >= prev);
      prev = cur;
    }
    std::vector<double> shuffled = v;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[rng.next() % i]);
    }
    CHECK(smoothed_cdf(v, 0.3, k) == smoothed_cdf(shuffled, 0.3, k));
  }
}

TEST_CASE("smoothed quantile of a single point at the kernel midpoint") {
  const SmoothingKernel k(0.1);
  std::vector<double> s{0.0};
  CHECK(std::abs(smoothed_quantile(s, 0.5, k)) <= 1e-9);
  CHECK_THROWS_AS(smoothed_quantile(s, 0.0, k), std::invalid_argument);
  CHECK_THROWS_AS(smoothed_quantile(s, 1.0, k), std::invalid_argument);
}

TEST_CASE("smoothed quantile stays within eps of the empirical one for separated samples") {
  SplitMix64 rng(31337);
  const SmoothingKernel k(0.1);
  for (int rep = 0; rep < 500; ++rep) {
    // pairwise gaps > 2 eps by spacing draws at least 0.25 apart
    const int n = 2 + static_cast<int>(rng.next() % 20);
    std::vector<double> v(static_cast<std::size_t>(n));
    double cur = 10.0 * rng.uniform();
    for (int i = 0; i < n; ++i) {
      cur += 0.25 + rng.uniform();
      v[static_cast<std::size_t>(i)] = cur;
    }
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.next() % i]);
    const double q = 0.02 + 0.96 * rng.uniform();
    const double smooth = smoothed_quantile(v, q, k);
    const double exact = empirical_quantile(v, q).finite_value();
    CHECK(std::abs(smooth - exact) <= k.epsilon + 1e-9);
  }
}

TEST_CASE("smoothed quantile error is nonincreasing as eps shrinks") {
  SplitMix64 rng(555);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 3 + static_cast<int>(rng.next() % 15);
    std::vector<double> v(static_cast<std::size_t>(n));
    double cur = 0.0;
    for (int i = 0; i < n; ++i) {
      cur += 0.5 + rng.uniform();
      v[static_cast<std::size_t>(i)] = cur;
    }
    const double q = 0.05 + 0.9 * rng.uniform();
    const double exact = empirical_quantile(v, q).finite_value();
    double prev_err = std::numeric_limits<double>::infinity();
    for (double eps : {0.1, 0.01, 0.001}) {
      const double err = std::abs(smoothed_quantile(v, q, SmoothingKernel(eps)) - exact);
      CHECK(err <= prev_err + 1e-9);
      prev_err = err;
    }
  }
}

TEST_CASE("nested score closed forms") {
  CHECK(absolute_residual_score(2.0, 5.0) == 3.0);
  CHECK(scaled_residual_score(0.0, 2.0, 4.0) == 2.0);
  CHECK(cqr_score(0.0, 1.0, 0.5) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(scaled_residual_score(0.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(scaled_residual_score(0.0, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("closed forms agree with the generic nested-set infimum") {
  SplitMix64 rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const double mu = 4.0 * rng.uniform() - 2.0;
    const double sigma = 0.2 + rng.uniform();
    const double y = 6.0 * rng.uniform() - 3.0;
    const double qlo = mu - rng.uniform();
    const double qhi = mu + rng.uniform();

    const double abs_inf = nested_score_infimum(
        [&](double t) { return t >= 0.0 && std::abs(y - mu) <= t; }, -1.0, 1.0);
    CHECK(abs_inf == doctest::Approx(absolute_residual_score(mu, y)).epsilon(1e-7));

    const double scaled_inf = nested_score_infimum(
        [&](double t) { return t >= 0.0 && std::abs(y - mu) <= sigma * t; }, -1.0, 1.0);
    CHECK(scaled_inf == doctest::Approx(scaled_residual_score(mu, sigma, y)).epsilon(1e-7));

    const double band_inf = nested_score_infimum(
        [&](double t) { return qlo - t <= y && y <= qhi + t; }, -1.0, 1.0);
    CHECK(band_inf == doctest::Approx(cqr_score(qlo, qhi, y)).epsilon(1e-7));
  }
}

TEST_CASE("nested score infimum rejects degenerate families") {
  CHECK_THROWS_AS(nested_score_infimum([](double) { return true; }, -1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(nested_score_infimum([](double) { return false; }, -1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(nested_score_infimum([](double t) { return t > 0; }, 1.0, -1.0),
                  std::invalid_argument);
}
