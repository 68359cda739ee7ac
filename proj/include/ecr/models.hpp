#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>

#include "ecr/dataset.hpp"

namespace ecr {

enum class ModelKind { linear, mlp };

struct ModelSpec {
  ModelKind kind = ModelKind::linear;
  int hidden_width = 10;  // mlp only
};

// eta_k = scale * k^(-exponent), k >= 1
struct StepSchedule {
  double scale = 1.0;
  double exponent = 0.6;

  double at(int k) const;
};

enum class LossKind { least_squares, huber, pinball };

struct Loss {
  LossKind kind = LossKind::least_squares;
  double param = 0.0;  // huber delta or pinball level

  static Loss least_squares() { return {LossKind::least_squares, 0.0}; }
  static Loss huber(double delta = 1.35) { return {LossKind::huber, delta}; }
  static Loss pinball(double q) { return {LossKind::pinball, q}; }
};

/**
 * Parametric predictor with a flat parameter vector.
 *
 * linear: theta = [intercept, weights], f(x) = theta0 + w.x
 * mlp:    one hidden ReLU layer of the given width,
 *         theta = [W (row-major), b, v, c], f(x) = c + v.relu(W x + b).
 *
 * Kink conventions are deterministic: relu'(0) = 0 and sign(0) = 0.
 */
struct ParamModel {
  ModelKind kind = ModelKind::linear;
  int input_dim = 0;
  int hidden_width = 0;  // 0 for linear
  Eigen::VectorXd theta;

  static ParamModel make_linear(int input_dim);
  static ParamModel make_mlp(int input_dim, int width, std::uint64_t seed);
  static ParamModel make(const ModelSpec& spec, int input_dim, std::uint64_t seed);

  Eigen::Index param_count() const { return theta.size(); }

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict_all(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  // d f / d theta at x
  Eigen::VectorXd model_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // hot path: acc += scale * (d f / d theta), no temporaries
  void add_scaled_gradient(const Eigen::Ref<const Eigen::VectorXd>& x, double scale,
                           Eigen::VectorXd& acc) const;

  // subgradient of |y - f(x)| w.r.t. theta, sign(0) taken as 0
  Eigen::VectorXd abs_residual_subgradient(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const;

  // hot path: acc += scale * (subgradient of |y - f(x)|), no temporaries;
  // returns the residual y - f(x)
  double add_abs_subgradient(const Eigen::Ref<const Eigen::VectorXd>& x, double y, double scale,
                             Eigen::VectorXd& acc) const;
};

struct FitConfig {
  Loss loss = Loss::least_squares();
  int iterations = 1000;
  StepSchedule schedule{};
  std::uint64_t seed = 0;
};

struct FitResult {
  ParamModel model;
  // set when the least-squares normal equations were singular and the fit
  // fell back to gradient descent
  bool gradient_fallback = false;
};

// Trains a model on the given split. Linear least squares is solved exactly
// through the normal equations (gradient fallback on a singular system);
// every other (loss, kind) pair runs full-batch subgradient descent with the
// configured schedule and returns the best iterate under the empirical loss.
FitResult fit(const Subset& data, const ModelSpec& spec, const FitConfig& cfg);

// mean empirical loss of a model on a split
double empirical_loss(const ParamModel& model, const Subset& data, const Loss& loss);

// default neighbor count: ceil(sqrt(n))
int default_knn_k(Eigen::Index n);

// k-nearest-neighbor conditional quantile: the level-q empirical quantile of
// the targets of the k nearest training covariates (Euclidean metric, ties
// broken by training index).
class KnnQuantileModel {
 public:
  KnnQuantileModel(Eigen::MatrixXd x, Eigen::VectorXd targets, int k, double q);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int k() const { return k_; }
  double level() const { return q_; }
  Eigen::Index train_size() const { return targets_.size(); }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd targets_;
  int k_;
  double q_;
};

// k-nearest-neighbor conditional mean on the same neighbor rule
class KnnMeanModel {
 public:
  KnnMeanModel(Eigen::MatrixXd x, Eigen::VectorXd targets, int k);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int k() const { return k_; }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd targets_;
  int k_;
};

}  // namespace ecr
