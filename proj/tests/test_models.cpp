#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ecr/models.hpp"
#include "ecr/quantile.hpp"
#include "ecr/rng.hpp"

using namespace ecr;

namespace {

Subset make_subset(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys) {
  Subset s;
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto d = static_cast<Eigen::Index>(xs.empty() ? 0 : xs[0].size());
  s.x.resize(n, d);
  s.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) s.x(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    s.y[i] = ys[static_cast<std::size_t>(i)];
  }
  return s;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("linear predict is the affine dot product") {
  ParamModel m = ParamModel::make_linear(2);
  m.theta = vec({0, 1, 2});
  CHECK(m.predict(vec({3, 4})) == 11.0);

  ParamModel c = ParamModel::make_linear(2);
  c.theta = vec({1, 0, 0});
  CHECK(c.predict(vec({-7, 3})) == 1.0);
  CHECK_THROWS_AS(m.predict(vec({1})), std::invalid_argument);
}

TEST_CASE("mlp with zero weights returns the output intercept") {
  ParamModel m = ParamModel::make_mlp(2, 4, 1);
  m.theta.setZero();
  m.theta[m.theta.size() - 1] = 2.5;
  CHECK(m.predict(vec({10, -3})) == 2.5);
  CHECK(m.param_count() == 4 * 3 + 5);
}

TEST_CASE("subgradient of the absolute residual") {
  ParamModel m = ParamModel::make_linear(1);
  m.theta = vec({0, 1});
  // exact fit: sign(0) = 0 convention gives the zero vector
  const Eigen::VectorXd g0 = m.abs_residual_subgradient(vec({2}), 2.0);
  CHECK(g0.norm() == 0.0);
  // residual 3 > 0: gradient is -(1, x)
  const Eigen::VectorXd g = m.abs_residual_subgradient(vec({2}), 5.0);
  CHECK(g[0] == -1.0);
  CHECK(g[1] == -2.0);
}

TEST_CASE("subgradient matches central finite differences away from kinks") {
  SplitMix64 rng(88);
  const double h = 1e-6;
  for (int rep = 0; rep < 100; ++rep) {
    const bool use_mlp = rep % 2 == 1;
    const int d = 2;
    ParamModel m = use_mlp ? ParamModel::make_mlp(d, 5, rep) : ParamModel::make_linear(d);
    for (Eigen::Index j = 0; j < m.param_count(); ++j) m.theta[j] = 2.0 * rng.uniform() - 1.0;
    const Eigen::VectorXd x = vec({2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0});
    const double y = 4.0 * rng.uniform() - 2.0;
    if (std::abs(y - m.predict(x)) < 1e-3) continue;  // kink neighborhood

    const Eigen::VectorXd g = m.abs_residual_subgradient(x, y);
    for (Eigen::Index j = 0; j < m.param_count(); ++j) {
      ParamModel up = m;
      ParamModel dn = m;
      up.theta[j] += h;
      dn.theta[j] -= h;
      const double fd = (std::abs(y - up.predict(x)) - std::abs(y - dn.predict(x))) / (2 * h);
      if (std::abs(fd) > 1e-7) {
        CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
      } else {
        CHECK(std::abs(g[j]) <= 1e-7);
      }
    }
  }
}

TEST_CASE("least squares interpolates collinear data exactly") {
  SplitMix64 rng(5);
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int i = 0; i < 40; ++i) {
    const double x = 4.0 * rng.uniform() - 2.0;
    xs.push_back({x});
    ys.push_back(2.0 * x);
  }
  const FitResult r = fit(make_subset(xs, ys), {ModelKind::linear}, {});
  CHECK_FALSE(r.gradient_fallback);
  CHECK(r.model.theta[0] == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(r.model.theta[1] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("least squares recovers a noiseless linear model") {
  SplitMix64 rng(6);
  const Eigen::VectorXd truth = vec({0.3, -1.2, 0.7});
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.gaussian();
    const double b = rng.gaussian();
    xs.push_back({a, b});
    ys.push_back(truth[0] + truth[1] * a + truth[2] * b);
  }
  const FitResult r = fit(make_subset(xs, ys), {ModelKind::linear}, {});
  CHECK((r.model.theta - truth).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("singular normal equations fall back to gradient descent") {
  // duplicated column makes X'X singular
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  SplitMix64 rng(11);
  for (int i = 0; i < 30; ++i) {
    const double x = rng.gaussian();
    xs.push_back({x, x});
    ys.push_back(3.0 * x);
  }
  FitConfig cfg;
  cfg.iterations = 400;
  const FitResult r = fit(make_subset(xs, ys), {ModelKind::linear}, cfg);
  CHECK(r.gradient_fallback);
  // the descent still has to not regress from the zero init
  const Subset data = make_subset(xs, ys);
  CHECK(empirical_loss(r.model, data, Loss::least_squares()) <=
        empirical_loss(ParamModel::make_linear(2), data, Loss::least_squares()));
}

TEST_CASE("pinball fit of a constant model equals the empirical quantile") {
  SplitMix64 rng(17);
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int i = 0; i < 101; ++i) {
    xs.push_back({});
    ys.push_back(rng.uniform());
  }
  const Subset data = make_subset(xs, ys);
  for (double q : {0.5, 0.9}) {
    FitConfig cfg;
    cfg.loss = Loss::pinball(q);
    cfg.iterations = 20000;
    const FitResult r = fit(data, {ModelKind::linear}, cfg);
    const double oracle = empirical_quantile(std::span<const double>(ys), q).finite_value();
    CHECK(r.model.theta[0] == doctest::Approx(oracle).epsilon(0.03));
    // the fitted value cannot beat the quantile's pinball risk
    CHECK(empirical_loss(r.model, data, cfg.loss) <=
          [&] {
            ParamModel m = ParamModel::make_linear(0);
            m.theta[0] = oracle;
            return empirical_loss(m, data, cfg.loss);
          }() + 1e-4);
  }
}

TEST_CASE("huber fit stays close to least squares on clean gaussian data") {
  SplitMix64 rng(23);
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int i = 0; i < 400; ++i) {
    const double x = rng.gaussian();
    xs.push_back({x});
    ys.push_back(1.0 + 0.5 * x + 0.1 * rng.gaussian());
  }
  FitConfig huber;
  huber.loss = Loss::huber();
  huber.iterations = 3000;
  const FitResult r = fit(make_subset(xs, ys), {ModelKind::linear}, huber);
  CHECK(r.model.theta[0] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(r.model.theta[1] == doctest::Approx(0.5).epsilon(0.10));
}

TEST_CASE("fit validates its configuration") {
  const Subset data = make_subset({{1.0}}, {1.0});
  FitConfig bad_huber;
  bad_huber.loss = Loss::huber(0.0);
  CHECK_THROWS_AS(fit(data, {ModelKind::linear}, bad_huber), std::invalid_argument);
  FitConfig bad_pinball;
  bad_pinball.loss = Loss::pinball(1.0);
  CHECK_THROWS_AS(fit(data, {ModelKind::linear}, bad_pinball), std::invalid_argument);
  CHECK_THROWS_AS(fit(Subset{}, {ModelKind::linear}, {}), std::invalid_argument);
}

TEST_CASE("knn quantile with k = n is the global quantile") {
  SplitMix64 rng(29);
  const int n = 50;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd t(n);
  std::vector<double> targets;
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.gaussian();
    t[i] = rng.uniform();
    targets.push_back(t[i]);
  }
  const KnnQuantileModel m(x, t, n, 0.7);
  const double expect = empirical_quantile(targets, 0.7).finite_value();
  CHECK(m.predict(vec({0.0})) == expect);
  CHECK(m.predict(vec({100.0})) == expect);
}

TEST_CASE("knn quantile with one training point returns its target") {
  Eigen::MatrixXd x(1, 1);
  x << 0.5;
  Eigen::VectorXd t(1);
  t << 42.0;
  const KnnQuantileModel m(x, t, 1, 0.9);
  CHECK(m.predict(vec({-3.0})) == 42.0);
  CHECK(m.predict(vec({8.0})) == 42.0);
}

TEST_CASE("knn quantile resolves well-separated clusters exactly") {
  SplitMix64 rng(31);
  const int per_cluster = 40;
  Eigen::MatrixXd x(2 * per_cluster, 1);
  Eigen::VectorXd t(2 * per_cluster);
  std::vector<double> left, right;
  for (int i = 0; i < per_cluster; ++i) {
    x(i, 0) = 0.0 + 0.01 * rng.uniform();
    t[i] = rng.uniform();
    left.push_back(t[i]);
    x(per_cluster + i, 0) = 100.0 + 0.01 * rng.uniform();
    t[per_cluster + i] = 5.0 + rng.uniform();
    right.push_back(t[per_cluster + i]);
  }
  const KnnQuantileModel m(x, t, per_cluster, 0.65);
  CHECK(m.predict(vec({0.0})) == empirical_quantile(left, 0.65).finite_value());
  CHECK(m.predict(vec({100.0})) == empirical_quantile(right, 0.65).finite_value());
}

TEST_CASE("knn models validate construction") {
  Eigen::MatrixXd x(2, 1);
  x << 0, 1;
  Eigen::VectorXd t(2);
  t << 1, 2;
  CHECK_THROWS_AS(KnnQuantileModel(x, t, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(KnnQuantileModel(x, t, 3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(KnnQuantileModel(x, t, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(KnnMeanModel(x, t, 5), std::invalid_argument);
  CHECK(default_knn_k(1000) == 32);
  CHECK(default_knn_k(1) == 1);
}

TEST_CASE("knn mean averages the neighbor targets") {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 10, 11;
  Eigen::VectorXd t(4);
  t << 2, 4, 100, 200;
  const KnnMeanModel m(x, t, 2);
  CHECK(m.predict(vec({0.4})) == doctest::Approx(3.0));
  CHECK(m.predict(vec({10.6})) == doctest::Approx(150.0));
}
