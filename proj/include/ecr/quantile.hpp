#pragma once

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>

namespace ecr {

// Value of an empirical quantile. The conformal rank rule can ask for a rank
// beyond the sample size, in which case the result is a tagged +infinity
// sentinel rather than a bare IEEE infinity.
class QuantileValue {
 public:
  static QuantileValue finite(double v) { return QuantileValue(v, false); }
  static QuantileValue infinite() { return QuantileValue(0.0, true); }

  bool is_infinite() const { return infinite_; }

  // the finite value; calling this on the sentinel is a logic error
  double finite_value() const {
    if (infinite_) throw std::logic_error("QuantileValue: +infinity sentinel has no finite value");
    return value_;
  }

  // IEEE view, +inf for the sentinel; used for interval geometry
  double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

 private:
  QuantileValue(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

// inf{t : #{s_i <= t}/n >= q}, i.e. the ceil(q n)-th order statistic for
// q in (0, 1]. Levels above 1 arise from the conformal rank rule and yield
// the +infinity sentinel. Throws on an empty sample or q <= 0.
QuantileValue empirical_quantile(std::span<const double> values, double q);

// rho_q(u) = q u for u >= 0, (q - 1) u otherwise; q must lie in (0, 1).
double pinball_loss(double u, double q);

// Quintic smoothing kernel with half-width epsilon > 0. gamma_smooth is the
// smooth step that replaces the indicator 1{z <= 0}: it is 1 below -epsilon,
// 0 above +epsilon, and a C^1 monotone polynomial bridge in between.
struct SmoothingKernel {
  double epsilon;

  explicit SmoothingKernel(double eps) : epsilon(eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("SmoothingKernel: epsilon must be positive");
  }
};

double gamma_smooth(double z, const SmoothingKernel& k);

// derivative of gamma_smooth: -(15/16) (eps^2 - z^2)^2 / eps^5 inside the
// window, 0 outside; continuous at the window edges
double gamma_smooth_derivative(double z, const SmoothingKernel& k);

// mean over i of gamma_smooth(s_i - t): a smooth, normalized stand-in for the
// empirical CDF, nondecreasing in t
double smoothed_cdf(std::span<const double> values, double t, const SmoothingKernel& k);

// inf{t : smoothed_cdf(t) >= q} for q in (0, 1), located by bisection on
// [min - eps, max + eps] to absolute tolerance 1e-10 (feasible side returned)
double smoothed_quantile(std::span<const double> values, double q, const SmoothingKernel& k);

// Generic nested-set score: the smallest t for which the (monotone) family
// contains the point. `contains` must be monotone in t; the initial bracket
// [lo, hi] is expanded geometrically until it straddles the boundary.
double nested_score_infimum(const std::function<bool(double)>& contains, double lo, double hi);

// closed forms of the nested score for the three canonical interval families
double absolute_residual_score(double mu, double y);
double scaled_residual_score(double mu, double sigma, double y);
double cqr_score(double q_lo, double q_hi, double y);

}  // namespace ecr
