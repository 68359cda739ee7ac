#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ecr/models.hpp"

namespace ecr {

// What the gradient is anchored at: the smoothed quantile of the losses, or
// the exact empirical quantile plugged in for speed.
enum class QuantileMode { empirical_plug_in, smoothed };

enum class QaeInit {
  // least-squares solution for a linear class, seeded He init for the mlp
  warm,
  zeros,
};

struct QaeConfig {
  double alpha = 0.1;
  double epsilon = 0.1;
  int iterations = 1000;
  StepSchedule schedule{};
  std::uint64_t seed = 0;
  QuantileMode quantile_mode = QuantileMode::empirical_plug_in;
  QaeInit init = QaeInit::warm;
};

struct QaeGradient {
  Eigen::VectorXd gradient;
  double anchor = 0.0;
  // no loss fell inside the smoothing window around the anchor, so the
  // weight denominator vanished and a zero gradient was returned
  bool stalled = false;
};

struct QaeTrace {
  // exact empirical (1-alpha)-quantile of |y - f(x)| at every iterate,
  // iterations + 1 entries (the last one is the final iterate)
  std::vector<double> objective;
  Eigen::VectorXd final_theta;
  Eigen::VectorXd best_theta;
  double best_objective = 0.0;
  int best_iteration = 0;  // 0 = the initial point
  int stall_count = 0;
  // more than 10% of the iterations stalled; a larger epsilon is advisable
  bool stall_warning = false;
};

struct QaeResult {
  ParamModel model;  // best iterate under the exact empirical quantile
  QaeTrace trace;
};

// Weighted-subgradient step direction at an explicit anchor: weights are the
// kernel derivative at (loss_i - anchor), normalized to sum to one. A zero
// denominator yields a zero gradient with the stall flag set.
QaeGradient qae_gradient_at_anchor(const ParamModel& model, const Subset& data, double anchor,
                                   double epsilon);

// The anchor is chosen per cfg.quantile_mode from the current losses.
QaeGradient qae_gradient(const ParamModel& model, const Subset& data, const QaeConfig& cfg);

// Subgradient descent on the empirical (1-alpha)-quantile of absolute errors.
// Iterates theta_{k+1} = theta_k - eta_k * qae_gradient(theta_k); returns the
// best iterate measured by the exact empirical quantile, with the full trace.
QaeResult minimize_qae(const Subset& data, const ModelSpec& spec, const QaeConfig& cfg);

}  // namespace ecr
