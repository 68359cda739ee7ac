#include "ecr/qae.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ecr/quantile.hpp"

namespace ecr {

namespace {

void validate(const QaeConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("qae: alpha must lie in (0,1)");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("qae: epsilon must be positive");
  if (cfg.iterations < 1) throw std::invalid_argument("qae: iterations must be >= 1");
  if (!(cfg.schedule.scale >= 0.0)) throw std::invalid_argument("qae: step scale must be nonnegative");
}

void compute_residuals(const ParamModel& model, const Subset& data, std::vector<double>& residuals,
                       std::vector<double>& losses) {
  const auto n = static_cast<std::size_t>(data.rows());
  residuals.resize(n);
  losses.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = data.y[static_cast<Eigen::Index>(i)] -
                     model.predict(data.x.row(static_cast<Eigen::Index>(i)));
    residuals[i] = r;
    losses[i] = std::abs(r);
  }
}

// weights Gamma'(loss_i - anchor), normalized; zero denominator -> stall
QaeGradient gradient_from_losses(const ParamModel& model, const Subset& data,
                                 const std::vector<double>& residuals,
                                 const std::vector<double>& losses, double anchor, double epsilon) {
  const SmoothingKernel kernel(epsilon);
  QaeGradient out;
  out.anchor = anchor;
  out.gradient = Eigen::VectorXd::Zero(model.param_count());

  double denom = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double w = gamma_smooth_derivative(losses[i] - anchor, kernel);
    if (w == 0.0) continue;
    denom += w;
    const double r = residuals[i];
    const double s = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    // subgradient of |y - f| is -sign(r) * grad f
    if (s != 0.0) model.add_scaled_gradient(data.x.row(static_cast<Eigen::Index>(i)), -s * w, out.gradient);
  }
  if (denom == 0.0) {
    out.gradient.setZero();
    out.stalled = true;
    return out;
  }
  out.gradient /= denom;
  return out;
}

double pick_anchor(const std::vector<double>& losses, const QaeConfig& cfg) {
  const double level = 1.0 - cfg.alpha;
  if (cfg.quantile_mode == QuantileMode::smoothed) {
    return smoothed_quantile(losses, level, SmoothingKernel(cfg.epsilon));
  }
  return empirical_quantile(losses, level).finite_value();
}

}  // namespace

QaeGradient qae_gradient_at_anchor(const ParamModel& model, const Subset& data, double anchor,
                                   double epsilon) {
  if (data.rows() == 0) throw std::invalid_argument("qae_gradient: empty learn split");
  if (!(epsilon > 0.0)) throw std::invalid_argument("qae_gradient: epsilon must be positive");
  std::vector<double> residuals;
  std::vector<double> losses;
  compute_residuals(model, data, residuals, losses);
  return gradient_from_losses(model, data, residuals, losses, anchor, epsilon);
}

QaeGradient qae_gradient(const ParamModel& model, const Subset& data, const QaeConfig& cfg) {
  validate(cfg);
  if (data.rows() == 0) throw std::invalid_argument("qae_gradient: empty learn split");
  std::vector<double> residuals;
  std::vector<double> losses;
  compute_residuals(model, data, residuals, losses);
  const double anchor = pick_anchor(losses, cfg);
  return gradient_from_losses(model, data, residuals, losses, anchor, cfg.epsilon);
}

QaeResult minimize_qae(const Subset& data, const ModelSpec& spec, const QaeConfig& cfg) {
  validate(cfg);
  if (data.rows() == 0) throw std::invalid_argument("minimize_qae: empty learn split");

  ParamModel model = [&] {
    if (cfg.init == QaeInit::zeros) return ParamModel::make(spec, static_cast<int>(data.dim()), cfg.seed);
    if (spec.kind == ModelKind::linear) {
      FitConfig warm;
      warm.loss = Loss::least_squares();
      warm.seed = cfg.seed;
      return fit(data, spec, warm).model;
    }
    return ParamModel::make(spec, static_cast<int>(data.dim()), cfg.seed);
  }();

  const double level = 1.0 - cfg.alpha;
  QaeTrace trace;
  trace.objective.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  trace.best_objective = std::numeric_limits<double>::infinity();

  std::vector<double> residuals;
  std::vector<double> losses;

  auto record = [&](int iteration) {
    compute_residuals(model, data, residuals, losses);
    for (double l : losses) {
      if (!std::isfinite(l)) {
        throw std::runtime_error("minimize_qae: non-finite objective at iteration " +
                                 std::to_string(iteration));
      }
    }
    const double objective = empirical_quantile(losses, level).finite_value();
    trace.objective.push_back(objective);
    if (objective < trace.best_objective) {
      trace.best_objective = objective;
      trace.best_theta = model.theta;
      trace.best_iteration = iteration;
    }
    return objective;
  };

  for (int k = 1; k <= cfg.iterations; ++k) {
    const double objective = record(k - 1);
    const double anchor = cfg.quantile_mode == QuantileMode::smoothed
                              ? smoothed_quantile(losses, level, SmoothingKernel(cfg.epsilon))
                              : objective;
    const QaeGradient g = gradient_from_losses(model, data, residuals, losses, anchor, cfg.epsilon);
    if (g.stalled) ++trace.stall_count;
    model.theta -= cfg.schedule.at(k) * g.gradient;
  }
  record(cfg.iterations);

  trace.final_theta = model.theta;
  trace.stall_warning = trace.stall_count * 10 > cfg.iterations;
  model.theta = trace.best_theta;
  return {std::move(model), std::move(trace)};
}

}  // namespace ecr
