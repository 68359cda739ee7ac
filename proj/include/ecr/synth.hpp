#pragma once

#include <cstdint>

#include "ecr/dataset.hpp"
#include "ecr/rng.hpp"

namespace ecr {

enum class NoiseLaw {
  normal,      // N(0,1)
  mix_normal,  // 0.95 N(0,1) + 0.05 N(2,1)
  pareto,      // Pareto(shape 2, scale 1)
  mix_pareto,  // 0.95 Pareto(2,1) + 0.05 N(-20,1)
};

// analytic mean of the law (used by the centering option)
double noise_mean(NoiseLaw law);

double sample_noise(NoiseLaw law, SplitMix64& rng);

enum class ScenarioKind {
  linear_3d,          // Y = X.theta + e,   X ~ N(0, I3), theta ~ U(0,1)^3
  heteroscedastic_1d, // Y = X + |x| e,     X ~ N(0,1)
  quadratic_nn,       // Y = X^2 + e,       X ~ N(0,1)
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::linear_3d;
  NoiseLaw noise = NoiseLaw::normal;
  int n_lrn = 1000;
  int n_cal = 1000;
  int n_test = 1000;
  std::uint64_t seed = 0;
  // stream for the linear coefficients; sharing it across repeats keeps theta
  // fixed for a whole experiment, passing the repeat seed redraws it
  std::uint64_t theta_seed = 0;
  double noise_scale = 1.0;   // 0 gives the noiseless override
  bool center_noise = false;  // subtract the analytic mean before scaling
};

// Seeded generation with disjoint substreams per split, so enlarging one
// split never perturbs the others.
Dataset generate(const ScenarioSpec& spec);

}  // namespace ecr
