#pragma once

#include <cstdint>
#include <stdexcept>

namespace ecr {

// Local Hölder regularity of the score quantile function:
// |Q(q1) - Q(q2)| <= L |q1 - q2|^gamma on [1-alpha-r, 1-alpha+r].
struct HolderParams {
  double l = 1.0;
  double gamma = 1.0;
  double r = 1.0;
};

// Complexity proxy for the worst-case CDF estimation error phi over a
// function class: exact class size, VC dimension, or an externally computed
// Rademacher complexity.
struct ComplexityInput {
  enum class Kind { finite_class, vc_dimension, rademacher };

  Kind kind = Kind::finite_class;
  double value = 1.0;

  static ComplexityInput finite_class(std::uint64_t size);
  static ComplexityInput vc_dimension(std::uint64_t dim);
  static ComplexityInput rademacher(double rn);
};

// sqrt(log(2/delta) / (2n)): the uniform empirical-CDF deviation at
// confidence 1 - delta
double dkw_epsilon(long n, double delta);

struct ConservativeLevel {
  double level = 0.0;
  // (n_c+1)(1-alpha) is an integer, so the result's hypothesis fails
  bool rank_hypothesis_warning = false;
  // the augmented level reached 1 and was clamped
  bool saturated = false;
};

// 1 - alpha + (1-alpha)/n_c + sqrt(log(2/delta)/(2 n_c)): the oracle coverage
// level whose shortest interval dominates the calibrated one w.h.p.
ConservativeLevel conservative_oracle_level(long n_c, double alpha, double delta);

// 2 L (1/n_c + sqrt(log(2/delta)/(2 n_c)))^gamma, valid when
// (1-alpha)/n_c + sqrt(log(2/delta)/(2 n_c)) <= r
double excess_volume_bound_fixed_f(long n_c, double alpha, double delta, const HolderParams& h);

// closed forms of phi: finite class sqrt(log(2|F|/delta)/(2n)); Rademacher
// 2 R_n + sqrt(log(1/delta)/(2n)); VC sqrt(8 VC log(e n / VC)/n) + sqrt(log(1/delta)/(2n))
double phi_closed_form(const ComplexityInput& c, long n, double delta);

struct EffortBound {
  double total = 0.0;
  double calibration_term = 0.0;  // 2 L (1/n_c + sqrt(log(2/delta)/(2 n_c)))^gamma
  double learning_term = 0.0;     // 4 L phi^gamma
};

// Total excess-volume slack of the quantile-learning pipeline; both addends
// are returned so callers can display the learning-vs-calibration split.
EffortBound effort_excess_volume_bound(long n_c, long n_l, double alpha, double delta,
                                       const HolderParams& h, const ComplexityInput& c);

// a L ((1-alpha)/n_c + sqrt(log(1/delta)/(2 n_c)))^gamma for a nested family
// whose expected size grows linearly as a t + b
double nested_length_bound(double a, double b, long n_c, double alpha, double delta,
                           const HolderParams& h);

struct AdaptiveBound {
  double total = 0.0;
  double size_term = 0.0;      // 4 psi
  double quantile_term = 0.0;  // 2 L (1/(n_c+1) + sqrt(log(1/delta)/(n_c+1)) + 2 phi)^gamma
};

// Adaptive-width analogue with user-supplied phi and psi complexity values.
AdaptiveBound adaptive_excess_volume_bound(long n_c, double delta, const HolderParams& h, double phi,
                                           double psi);

}  // namespace ecr
