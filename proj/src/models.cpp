#include "ecr/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ecr/quantile.hpp"
#include "ecr/rng.hpp"

namespace ecr {

namespace {

constexpr std::uint64_t kMlpInitStream = 0x6d6c70;  // "mlp"

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_dim(const ParamModel& m, const Eigen::Ref<const Eigen::VectorXd>& x, const char* where) {
  if (x.size() != m.input_dim) {
    throw std::invalid_argument(std::string(where) + ": covariate dimension mismatch");
  }
}

void validate_loss(const Loss& loss) {
  if (loss.kind == LossKind::huber && !(loss.param > 0.0)) {
    throw std::invalid_argument("fit: huber delta must be positive");
  }
  if (loss.kind == LossKind::pinball && !(loss.param > 0.0 && loss.param < 1.0)) {
    throw std::invalid_argument("fit: pinball level must lie in (0,1)");
  }
}

// derivative of the per-sample loss w.r.t. the residual r = y - f(x)
double loss_residual_derivative(double r, const Loss& loss) {
  switch (loss.kind) {
    case LossKind::least_squares:
      return 2.0 * r;
    case LossKind::huber:
      return std::clamp(r, -loss.param, loss.param);
    case LossKind::pinball:
      if (r > 0.0) return loss.param;
      if (r < 0.0) return loss.param - 1.0;
      return 0.0;
  }
  return 0.0;
}

double loss_value(double r, const Loss& loss) {
  switch (loss.kind) {
    case LossKind::least_squares:
      return r * r;
    case LossKind::huber: {
      const double a = std::abs(r);
      return a <= loss.param ? 0.5 * r * r : loss.param * (a - 0.5 * loss.param);
    }
    case LossKind::pinball:
      return pinball_loss(r, loss.param);
  }
  return 0.0;
}

FitResult fit_gradient_descent(const Subset& data, const ModelSpec& spec, const FitConfig& cfg,
                               bool fallback_flag) {
  ParamModel model = ParamModel::make(spec, static_cast<int>(data.dim()), cfg.seed);
  const auto n = data.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  double best_loss = empirical_loss(model, data, cfg.loss);
  Eigen::VectorXd best_theta = model.theta;
  Eigen::VectorXd grad(model.param_count());

  for (int k = 1; k <= cfg.iterations; ++k) {
    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double f = model.predict(data.x.row(i));
      const double r = data.y[i] - f;
      // d loss / d theta = -loss'(r) * grad f
      const double d = loss_residual_derivative(r, cfg.loss);
      if (d != 0.0) model.add_scaled_gradient(data.x.row(i), -d * inv_n, grad);
    }
    model.theta -= cfg.schedule.at(k) * grad;
    const double loss = empirical_loss(model, data, cfg.loss);
    if (loss < best_loss) {
      best_loss = loss;
      best_theta = model.theta;
    }
  }
  model.theta = std::move(best_theta);
  return {std::move(model), fallback_flag};
}

}  // namespace

double StepSchedule::at(int k) const {
  if (k < 1) throw std::invalid_argument("StepSchedule: iteration index starts at 1");
  return scale * std::pow(static_cast<double>(k), -exponent);
}

ParamModel ParamModel::make_linear(int input_dim) {
  if (input_dim < 0) throw std::invalid_argument("ParamModel: input_dim must be nonnegative");
  ParamModel m;
  m.kind = ModelKind::linear;
  m.input_dim = input_dim;
  m.theta = Eigen::VectorXd::Zero(input_dim + 1);
  return m;
}

ParamModel ParamModel::make_mlp(int input_dim, int width, std::uint64_t seed) {
  if (input_dim < 1) throw std::invalid_argument("ParamModel: mlp needs input_dim >= 1");
  if (width < 1) throw std::invalid_argument("ParamModel: mlp width must be positive");
  ParamModel m;
  m.kind = ModelKind::mlp;
  m.input_dim = input_dim;
  m.hidden_width = width;
  m.theta = Eigen::VectorXd::Zero(width * (input_dim + 1) + width + 1);
  // He-style scaling, deterministic in the seed
  SplitMix64 rng(derive_stream(seed, kMlpInitStream));
  const double w_scale = std::sqrt(2.0 / input_dim);
  const double v_scale = std::sqrt(2.0 / width);
  for (int j = 0; j < width * input_dim; ++j) m.theta[j] = w_scale * rng.gaussian();
  for (int j = 0; j < width; ++j) m.theta[width * input_dim + width + j] = v_scale * rng.gaussian();
  return m;
}

ParamModel ParamModel::make(const ModelSpec& spec, int input_dim, std::uint64_t seed) {
  return spec.kind == ModelKind::linear ? make_linear(input_dim)
                                        : make_mlp(input_dim, spec.hidden_width, seed);
}

double ParamModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(*this, x, "predict");
  if (kind == ModelKind::linear) {
    return theta[0] + theta.tail(input_dim).dot(x);
  }
  const int w = hidden_width;
  const int d = input_dim;
  double out = theta[w * d + 2 * w];  // output intercept
  for (int j = 0; j < w; ++j) {
    const double h = theta.segment(static_cast<Eigen::Index>(j) * d, d).dot(x) + theta[w * d + j];
    if (h > 0.0) out += theta[w * d + w + j] * h;
  }
  return out;
}

Eigen::VectorXd ParamModel::predict_all(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
  return out;
}

Eigen::VectorXd ParamModel::model_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(*this, x, "model_gradient");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(param_count());
  add_scaled_gradient(x, 1.0, g);
  return g;
}

void ParamModel::add_scaled_gradient(const Eigen::Ref<const Eigen::VectorXd>& x, double scale,
                                     Eigen::VectorXd& acc) const {
  if (kind == ModelKind::linear) {
    acc[0] += scale;
    acc.tail(input_dim) += scale * x;
    return;
  }
  const int w = hidden_width;
  const int d = input_dim;
  acc[w * d + 2 * w] += scale;  // d f / d c
  for (int j = 0; j < w; ++j) {
    const double h = theta.segment(static_cast<Eigen::Index>(j) * d, d).dot(x) + theta[w * d + j];
    if (h > 0.0) {  // relu'(0) = 0
      const double vj = theta[w * d + w + j];
      acc[w * d + w + j] += scale * h;                                       // d f / d v_j
      acc[w * d + j] += scale * vj;                                          // d f / d b_j
      acc.segment(static_cast<Eigen::Index>(j) * d, d) += (scale * vj) * x;  // d f / d W_j.
    }
  }
}

Eigen::VectorXd ParamModel::abs_residual_subgradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                     double y) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(param_count());
  add_abs_subgradient(x, y, 1.0, g);
  return g;
}

double ParamModel::add_abs_subgradient(const Eigen::Ref<const Eigen::VectorXd>& x, double y,
                                       double scale, Eigen::VectorXd& acc) const {
  const double r = y - predict(x);
  const double s = sign_or_zero(r);
  if (s != 0.0) add_scaled_gradient(x, -s * scale, acc);
  return r;
}

double empirical_loss(const ParamModel& model, const Subset& data, const Loss& loss) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    acc += loss_value(data.y[i] - model.predict(data.x.row(i)), loss);
  }
  return acc / static_cast<double>(data.rows());
}

FitResult fit(const Subset& data, const ModelSpec& spec, const FitConfig& cfg) {
  if (data.rows() == 0) throw std::invalid_argument("fit: empty learn split");
  if (cfg.iterations < 1) throw std::invalid_argument("fit: iterations must be >= 1");
  if (!(cfg.schedule.scale >= 0.0)) throw std::invalid_argument("fit: step scale must be nonnegative");
  validate_loss(cfg.loss);
  if (!data.y.allFinite() || !data.x.allFinite()) {
    throw std::invalid_argument("fit: data contains non-finite values");
  }

  if (spec.kind == ModelKind::linear && cfg.loss.kind == LossKind::least_squares) {
    const Eigen::Index d = data.dim();
    Eigen::MatrixXd a(data.rows(), d + 1);
    a.col(0).setOnes();
    a.rightCols(d) = data.x;
    const Eigen::MatrixXd normal = a.transpose() * a;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (lu.isInvertible()) {
      ParamModel m = ParamModel::make_linear(static_cast<int>(d));
      m.theta = lu.solve(a.transpose() * data.y);
      return {std::move(m), false};
    }
    return fit_gradient_descent(data, spec, cfg, true);
  }
  return fit_gradient_descent(data, spec, cfg, false);
}

int default_knn_k(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("default_knn_k: empty training set");
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
}

namespace {

void validate_knn(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, int k) {
  if (t.size() == 0) throw std::invalid_argument("knn: empty training set");
  if (x.rows() != t.size()) throw std::invalid_argument("knn: covariate/target size mismatch");
  if (k < 1 || k > t.size()) throw std::invalid_argument("knn: k must lie in [1, n]");
}

// targets of the k nearest rows; ties in distance break by training index
void nearest_targets(const Eigen::MatrixXd& x, const Eigen::VectorXd& t,
                     const Eigen::Ref<const Eigen::VectorXd>& query, int k,
                     std::vector<double>& out) {
  if (query.size() != x.cols()) throw std::invalid_argument("knn: covariate dimension mismatch");
  const Eigen::Index n = x.rows();
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    dist[static_cast<std::size_t>(i)] = {(x.row(i).transpose() - query).squaredNorm(), i};
  }
  std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
  out.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = t[dist[static_cast<std::size_t>(i)].second];
}

}  // namespace

KnnQuantileModel::KnnQuantileModel(Eigen::MatrixXd x, Eigen::VectorXd targets, int k, double q)
    : x_(std::move(x)), targets_(std::move(targets)), k_(k), q_(q) {
  validate_knn(x_, targets_, k_);
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("KnnQuantileModel: level must lie in (0,1)");
}

double KnnQuantileModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::vector<double> nbr;
  nearest_targets(x_, targets_, x, k_, nbr);
  return empirical_quantile(nbr, q_).finite_value();
}

KnnMeanModel::KnnMeanModel(Eigen::MatrixXd x, Eigen::VectorXd targets, int k)
    : x_(std::move(x)), targets_(std::move(targets)), k_(k) {
  validate_knn(x_, targets_, k_);
}

double KnnMeanModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::vector<double> nbr;
  nearest_targets(x_, targets_, x, k_, nbr);
  double acc = 0.0;
  for (double v : nbr) acc += v;
  return acc / static_cast<double>(nbr.size());
}

}  // namespace ecr
