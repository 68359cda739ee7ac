#include "ecr/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace ecr {

namespace {

void require_nonempty(const Subset& s, const char* which) {
  if (s.rows() == 0) throw std::invalid_argument(std::string("conformal: empty ") + which + " split");
}

std::vector<double> abs_residual_scores(const ParamModel& model, const Subset& s) {
  std::vector<double> scores(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    scores[static_cast<std::size_t>(i)] = absolute_residual_score(model.predict(s.x.row(i)), s.y[i]);
  }
  return scores;
}

int resolve_k(int knn_k, Eigen::Index n) {
  if (knn_k == 0) return std::min<int>(default_knn_k(n), static_cast<int>(n));
  return knn_k;
}

}  // namespace

CalibrationResult calibrate(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw std::invalid_argument("calibrate: empty calibration set");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("calibrate: alpha must lie in (0,1)");
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("calibrate: non-finite score");
  }
  const long n = static_cast<long>(scores.size());
  CalibrationResult out;
  out.n_cal = n;
  out.alpha = alpha;
  out.rank = static_cast<long>(std::ceil((1.0 - alpha) * static_cast<double>(n + 1)));
  if (out.rank > n) {
    out.t_hat = QuantileValue::infinite();
    return out;
  }
  std::vector<double> buf(scores.begin(), scores.end());
  std::nth_element(buf.begin(), buf.begin() + (out.rank - 1), buf.end());
  out.t_hat = QuantileValue::finite(buf[static_cast<std::size_t>(out.rank - 1)]);
  return out;
}

IntervalPredictor symmetric_interval(ScalarField center, CalibrationResult cal, std::string method) {
  const double t = cal.t_hat.as_double();
  return {std::move(method), cal,
          [c = std::move(center), t](const Eigen::Ref<const Eigen::VectorXd>& x) {
            const double f = c(x);
            return Interval{f - t, f + t};
          }};
}

IntervalPredictor scaled_interval(ScalarField center, ScalarField scale, CalibrationResult cal,
                                  std::string method) {
  const double t = cal.t_hat.as_double();
  return {std::move(method), cal,
          [c = std::move(center), s = std::move(scale), t](const Eigen::Ref<const Eigen::VectorXd>& x) {
            const double f = c(x);
            const double w = s(x) * t;
            return Interval{f - w, f + w};
          }};
}

IntervalPredictor band_interval(ScalarField lower_q, ScalarField upper_q, CalibrationResult cal,
                                std::string method) {
  const double t = cal.t_hat.as_double();
  return {std::move(method), cal,
          [lo = std::move(lower_q), hi = std::move(upper_q), t](const Eigen::Ref<const Eigen::VectorXd>& x) {
            return Interval{lo(x) - t, hi(x) + t};
          }};
}

IntervalPredictor additive_interval(ScalarField center, ScalarField halfwidth, CalibrationResult cal,
                                    std::string method) {
  const double t = cal.t_hat.as_double();
  return {std::move(method), cal,
          [c = std::move(center), s = std::move(halfwidth), t](const Eigen::Ref<const Eigen::VectorXd>& x) {
            const double f = c(x);
            const double w = s(x) + t;
            return Interval{f - w, f + w};
          }};
}

IntervalPredictor split_cp(const Dataset& data, double alpha, const FitConfig& base_fit,
                           const ModelSpec& spec) {
  if (base_fit.loss.kind == LossKind::pinball) {
    throw std::invalid_argument("split_cp: base loss must be least-squares or huber");
  }
  const Subset learn = data.subset(Split::learn);
  const Subset cal = data.subset(Split::cal);
  require_nonempty(learn, "learn");
  require_nonempty(cal, "cal");

  ParamModel mu = fit(learn, spec, base_fit).model;
  const std::vector<double> scores = abs_residual_scores(mu, cal);
  CalibrationResult calres = calibrate(scores, alpha);
  std::string tag = base_fit.loss.kind == LossKind::huber ? "split-cp-huber" : "split-cp";
  return symmetric_interval(
      [m = std::move(mu)](const Eigen::Ref<const Eigen::VectorXd>& x) { return m.predict(x); },
      calres, std::move(tag));
}

IntervalPredictor effort(const Dataset& data, double alpha, const QaeConfig& cfg,
                         const ModelSpec& spec) {
  const Subset learn = data.subset(Split::learn);
  const Subset cal = data.subset(Split::cal);
  require_nonempty(learn, "learn");
  require_nonempty(cal, "cal");

  QaeConfig qae_cfg = cfg;
  qae_cfg.alpha = alpha;
  ParamModel f_hat = minimize_qae(learn, spec, qae_cfg).model;
  const std::vector<double> scores = abs_residual_scores(f_hat, cal);
  CalibrationResult calres = calibrate(scores, alpha);
  return symmetric_interval(
      [m = std::move(f_hat)](const Eigen::Ref<const Eigen::VectorXd>& x) { return m.predict(x); },
      calres, "effort");
}

IntervalPredictor locally_weighted_cp(const Dataset& data, double alpha, int knn_k,
                                      const ModelSpec& spec) {
  const Subset learn = data.subset(Split::learn);
  const Subset cal = data.subset(Split::cal);
  require_nonempty(learn, "learn");
  require_nonempty(cal, "cal");

  FitConfig ls;
  ls.loss = Loss::least_squares();
  ParamModel mu = fit(learn, spec, ls).model;

  Eigen::VectorXd residuals(learn.rows());
  for (Eigen::Index i = 0; i < learn.rows(); ++i) {
    residuals[i] = std::abs(learn.y[i] - mu.predict(learn.x.row(i)));
  }
  const double floor = 1e-6 * residuals.mean();
  const int k = resolve_k(knn_k, learn.rows());

  ScalarField sigma;
  if (floor > 0.0) {
    auto knn = std::make_shared<const KnnMeanModel>(learn.x, residuals, k);
    sigma = [knn, floor](const Eigen::Ref<const Eigen::VectorXd>& x) {
      return std::max(knn->predict(x), floor);
    };
  } else {
    // perfectly interpolated learn split; a unit scale keeps the scores finite
    sigma = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 1.0; };
  }

  std::vector<double> scores(static_cast<std::size_t>(cal.rows()));
  for (Eigen::Index i = 0; i < cal.rows(); ++i) {
    scores[static_cast<std::size_t>(i)] =
        scaled_residual_score(mu.predict(cal.x.row(i)), sigma(cal.x.row(i)), cal.y[i]);
  }
  CalibrationResult calres = calibrate(scores, alpha);
  return scaled_interval(
      [m = std::move(mu)](const Eigen::Ref<const Eigen::VectorXd>& x) { return m.predict(x); },
      std::move(sigma), calres, "lw-cp");
}

IntervalPredictor cqr(const Dataset& data, double alpha, int knn_k) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("cqr: alpha must lie in (0,1)");
  const Subset learn = data.subset(Split::learn);
  const Subset cal = data.subset(Split::cal);
  require_nonempty(learn, "learn");
  require_nonempty(cal, "cal");

  const int k = resolve_k(knn_k, learn.rows());
  auto q_lo = std::make_shared<const KnnQuantileModel>(learn.x, learn.y, k, alpha / 2.0);
  auto q_hi = std::make_shared<const KnnQuantileModel>(learn.x, learn.y, k, 1.0 - alpha / 2.0);

  std::vector<double> scores(static_cast<std::size_t>(cal.rows()));
  for (Eigen::Index i = 0; i < cal.rows(); ++i) {
    scores[static_cast<std::size_t>(i)] =
        cqr_score(q_lo->predict(cal.x.row(i)), q_hi->predict(cal.x.row(i)), cal.y[i]);
  }
  CalibrationResult calres = calibrate(scores, alpha);
  return band_interval([q_lo](const Eigen::Ref<const Eigen::VectorXd>& x) { return q_lo->predict(x); },
                       [q_hi](const Eigen::Ref<const Eigen::VectorXd>& x) { return q_hi->predict(x); },
                       calres, "cqr");
}

IntervalPredictor ad_effort(const Dataset& data, double alpha, const QaeConfig& cfg,
                            const ModelSpec& spec, int knn_k, bool subsplit_learn) {
  const Subset learn = data.subset(Split::learn);
  const Subset cal = data.subset(Split::cal);
  require_nonempty(learn, "learn");
  require_nonempty(cal, "cal");

  // by default the same learn data trains both the center and the halfwidth
  Subset f_learn = learn;
  Subset s_learn = learn;
  if (subsplit_learn) {
    const Eigen::Index half = learn.rows() / 2;
    if (half == 0 || half == learn.rows()) {
      throw std::invalid_argument("ad_effort: learn split too small to sub-split");
    }
    f_learn.x = learn.x.topRows(half);
    f_learn.y = learn.y.head(half);
    s_learn.x = learn.x.bottomRows(learn.rows() - half);
    s_learn.y = learn.y.tail(learn.rows() - half);
  }

  QaeConfig qae_cfg = cfg;
  qae_cfg.alpha = alpha;
  ParamModel f_hat = minimize_qae(f_learn, spec, qae_cfg).model;

  Eigen::VectorXd residuals(s_learn.rows());
  for (Eigen::Index i = 0; i < s_learn.rows(); ++i) {
    residuals[i] = std::abs(s_learn.y[i] - f_hat.predict(s_learn.x.row(i)));
  }
  const int k = resolve_k(knn_k, s_learn.rows());
  auto s_hat = std::make_shared<const KnnQuantileModel>(s_learn.x, residuals, k, 1.0 - alpha);

  std::vector<double> scores(static_cast<std::size_t>(cal.rows()));
  for (Eigen::Index i = 0; i < cal.rows(); ++i) {
    const double r = std::abs(cal.y[i] - f_hat.predict(cal.x.row(i)));
    scores[static_cast<std::size_t>(i)] = r - s_hat->predict(cal.x.row(i));
  }
  CalibrationResult calres = calibrate(scores, alpha);
  return additive_interval(
      [m = std::move(f_hat)](const Eigen::Ref<const Eigen::VectorXd>& x) { return m.predict(x); },
      [s_hat](const Eigen::Ref<const Eigen::VectorXd>& x) { return s_hat->predict(x); }, calres,
      "ad-effort");
}

Evaluation coverage_and_length(const IntervalPredictor& predictor, const Subset& test) {
  if (test.rows() == 0) throw std::invalid_argument("coverage_and_length: empty test split");
  Evaluation out;
  out.lengths.reserve(static_cast<std::size_t>(test.rows()));
  long covered = 0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    const Interval iv = predictor.at(test.x.row(i));
    if (iv.contains(test.y[i])) ++covered;
    const double len = iv.length();
    out.lengths.push_back(len);
    total += len;
  }
  out.coverage = static_cast<double>(covered) / static_cast<double>(test.rows());
  out.mean_length = total / static_cast<double>(test.rows());
  return out;
}

}  // namespace ecr
