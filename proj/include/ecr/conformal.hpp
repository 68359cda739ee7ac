#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecr/dataset.hpp"
#include "ecr/models.hpp"
#include "ecr/qae.hpp"
#include "ecr/quantile.hpp"

namespace ecr {

/**
 * Split-conformal calibration: t_hat is the ceil((n_c+1)(1-alpha))-th smallest
 * score, or the +infinity sentinel when that rank exceeds n_c. Equivalent to
 * the empirical quantile of the scores at level (1-alpha)(n_c+1)/n_c.
 */
struct CalibrationResult {
  QuantileValue t_hat = QuantileValue::infinite();
  long rank = 0;
  long n_cal = 0;
  double alpha = 0.0;
};

CalibrationResult calibrate(std::span<const double> scores, double alpha);

// Closed interval [lo, hi]; lo > hi encodes the empty interval, infinite
// endpoints the whole line.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double y) const { return lo <= y && y <= hi; }
  double length() const { return hi > lo ? hi - lo : 0.0; }
};

using ScalarField = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

// Calibrated set-valued predictor x -> [lower(x), upper(x)].
class IntervalPredictor {
 public:
  using Eval = std::function<Interval(const Eigen::Ref<const Eigen::VectorXd>&)>;

  IntervalPredictor(std::string method, CalibrationResult calibration, Eval eval)
      : method_(std::move(method)), calibration_(calibration), eval_(std::move(eval)) {}

  Interval at(const Eigen::Ref<const Eigen::VectorXd>& x) const { return eval_(x); }
  const std::string& method() const { return method_; }
  const CalibrationResult& calibration() const { return calibration_; }

 private:
  std::string method_;
  CalibrationResult calibration_;
  Eval eval_;
};

// Assembly from arbitrary base predictors; the named constructors below are
// built on these, and tests can inject oracle components through them.
IntervalPredictor symmetric_interval(ScalarField center, CalibrationResult cal, std::string method);
IntervalPredictor scaled_interval(ScalarField center, ScalarField scale, CalibrationResult cal,
                                  std::string method);
IntervalPredictor band_interval(ScalarField lower_q, ScalarField upper_q, CalibrationResult cal,
                                std::string method);
IntervalPredictor additive_interval(ScalarField center, ScalarField halfwidth, CalibrationResult cal,
                                    std::string method);

// Standard split CP: fit the base regressor on the learn split (least squares
// or huber), calibrate absolute residuals, return the symmetric interval.
IntervalPredictor split_cp(const Dataset& data, double alpha, const FitConfig& base_fit = {},
                           const ModelSpec& spec = {});

// Quantile-of-absolute-error learning step followed by the standard
// calibration; symmetric interval around the learned predictor.
IntervalPredictor effort(const Dataset& data, double alpha, const QaeConfig& cfg = {},
                         const ModelSpec& spec = {});

// Locally-weighted CP: least-squares center, k-NN conditional mean of
// absolute residuals as the scale (floored away from zero), scores |y-mu|/sigma.
IntervalPredictor locally_weighted_cp(const Dataset& data, double alpha, int knn_k = 0,
                                      const ModelSpec& spec = {});

// Conformalized quantile regression on k-NN conditional quantiles at
// alpha/2 and 1-alpha/2; the calibration shift may be negative.
IntervalPredictor cqr(const Dataset& data, double alpha, int knn_k = 0);

// Adaptive variant: QAE-learned center, k-NN conditional (1-alpha)-quantile
// of learn-split absolute residuals as the halfwidth, calibrated additively.
// With subsplit_learn the learn split is halved: the first half trains the
// center, the second the halfwidth.
IntervalPredictor ad_effort(const Dataset& data, double alpha, const QaeConfig& cfg = {},
                            const ModelSpec& spec = {}, int knn_k = 0, bool subsplit_learn = false);

struct Evaluation {
  double coverage = 0.0;
  double mean_length = 0.0;  // +inf propagates
  std::vector<double> lengths;
};

Evaluation coverage_and_length(const IntervalPredictor& predictor, const Subset& test);

}  // namespace ecr
