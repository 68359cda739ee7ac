#include "ecr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ecr {

namespace {

constexpr double kParetoShape = 2.0;
constexpr double kParetoScale = 1.0;
constexpr double kMixWeight = 0.95;

// substream ids within a scenario seed
constexpr std::uint64_t kThetaStream = 0;
constexpr std::uint64_t kLearnStream = 1;
constexpr std::uint64_t kCalStream = 2;
constexpr std::uint64_t kTestStream = 3;

double sample_pareto(SplitMix64& rng) {
  // inverse CDF: scale * U^(-1/shape), U in (0,1)
  return kParetoScale * std::pow(rng.uniform_open(), -1.0 / kParetoShape);
}

struct Block {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Block generate_block(const ScenarioSpec& spec, const Eigen::VectorXd& theta, int n,
                     std::uint64_t stream) {
  SplitMix64 rng(derive_stream(spec.seed, stream));
  const int d = spec.kind == ScenarioKind::linear_3d ? 3 : 1;
  const double shift = spec.center_noise ? noise_mean(spec.noise) : 0.0;

  Block b;
  b.x.resize(n, d);
  b.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) b.x(i, j) = rng.gaussian();
    const double eps = spec.noise_scale * (sample_noise(spec.noise, rng) - shift);
    switch (spec.kind) {
      case ScenarioKind::linear_3d:
        b.y[i] = b.x.row(i).dot(theta) + eps;
        break;
      case ScenarioKind::heteroscedastic_1d:
        b.y[i] = b.x(i, 0) + std::abs(b.x(i, 0)) * eps;
        break;
      case ScenarioKind::quadratic_nn:
        b.y[i] = b.x(i, 0) * b.x(i, 0) + eps;
        break;
    }
  }
  return b;
}

}  // namespace

double noise_mean(NoiseLaw law) {
  switch (law) {
    case NoiseLaw::normal:
      return 0.0;
    case NoiseLaw::mix_normal:
      return (1.0 - kMixWeight) * 2.0;
    case NoiseLaw::pareto:
      // shape * scale / (shape - 1)
      return kParetoShape * kParetoScale / (kParetoShape - 1.0);
    case NoiseLaw::mix_pareto:
      return kMixWeight * 2.0 + (1.0 - kMixWeight) * (-20.0);
  }
  throw std::logic_error("noise_mean: unknown law");
}

double sample_noise(NoiseLaw law, SplitMix64& rng) {
  switch (law) {
    case NoiseLaw::normal:
      return rng.gaussian();
    case NoiseLaw::mix_normal:
      return rng.uniform() < kMixWeight ? rng.gaussian() : 2.0 + rng.gaussian();
    case NoiseLaw::pareto:
      return sample_pareto(rng);
    case NoiseLaw::mix_pareto:
      return rng.uniform() < kMixWeight ? sample_pareto(rng) : -20.0 + rng.gaussian();
  }
  throw std::logic_error("sample_noise: unknown law");
}

Dataset generate(const ScenarioSpec& spec) {
  if (spec.n_lrn < 1 || spec.n_cal < 1 || spec.n_test < 1) {
    throw std::invalid_argument("generate: split sizes must be >= 1");
  }
  if (!(spec.noise_scale >= 0.0)) {
    throw std::invalid_argument("generate: noise scale must be nonnegative");
  }

  Eigen::VectorXd theta;
  if (spec.kind == ScenarioKind::linear_3d) {
    SplitMix64 trng(derive_stream(spec.theta_seed, kThetaStream));
    theta.resize(3);
    for (int j = 0; j < 3; ++j) theta[j] = trng.uniform();
  }

  const Block learn = generate_block(spec, theta, spec.n_lrn, kLearnStream);
  const Block cal = generate_block(spec, theta, spec.n_cal, kCalStream);
  const Block test = generate_block(spec, theta, spec.n_test, kTestStream);

  const Eigen::Index n = spec.n_lrn + spec.n_cal + spec.n_test;
  Dataset data;
  data.x.resize(n, learn.x.cols());
  data.y.resize(n);
  data.split.resize(static_cast<std::size_t>(n));
  data.x << learn.x, cal.x, test.x;
  data.y << learn.y, cal.y, test.y;
  std::fill_n(data.split.begin(), spec.n_lrn, Split::learn);
  std::fill_n(data.split.begin() + spec.n_lrn, spec.n_cal, Split::cal);
  std::fill_n(data.split.begin() + spec.n_lrn + spec.n_cal, spec.n_test, Split::test);
  if (spec.kind == ScenarioKind::linear_3d) data.linear_coeffs = theta;
  return data;
}

}  // namespace ecr
