#include "ecr/bounds.hpp"

#include <cmath>
#include <string>

namespace ecr {

namespace {

void check_n(long n, const char* where) {
  if (n < 1) throw std::invalid_argument(std::string(where) + ": n must be >= 1");
}

void check_delta(double delta, const char* where) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument(std::string(where) + ": delta must lie in (0,1)");
  }
}

void check_alpha(double alpha, const char* where) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument(std::string(where) + ": alpha must lie in (0,1)");
  }
}

void check_holder(const HolderParams& h, const char* where) {
  if (!(h.l >= 0.0)) throw std::invalid_argument(std::string(where) + ": L must be nonnegative");
  if (!(h.gamma > 0.0 && h.gamma <= 1.0)) {
    throw std::invalid_argument(std::string(where) + ": gamma must lie in (0,1]");
  }
  if (!(h.r > 0.0 && h.r <= 1.0)) {
    throw std::invalid_argument(std::string(where) + ": r must lie in (0,1]");
  }
}

[[noreturn]] void hypothesis_failure(const char* where, const std::string& inequality, double lhs,
                                     double rhs) {
  throw std::invalid_argument(std::string(where) + ": hypothesis violated: " + inequality + " (" +
                              std::to_string(lhs) + " > " + std::to_string(rhs) + ")");
}

// the hypothesis shared by the fixed-f corollary and the pipeline bound
void check_calibration_hypothesis(long n_c, double alpha, double delta, const HolderParams& h,
                                  const char* where) {
  const double lhs = (1.0 - alpha) / static_cast<double>(n_c) + dkw_epsilon(n_c, delta);
  if (lhs > h.r) {
    hypothesis_failure(where, "(1-alpha)/n_c + sqrt(log(2/delta)/(2 n_c)) <= r", lhs, h.r);
  }
}

}  // namespace

ComplexityInput ComplexityInput::finite_class(std::uint64_t size) {
  if (size < 1) throw std::invalid_argument("ComplexityInput: class size must be >= 1");
  return {Kind::finite_class, static_cast<double>(size)};
}

ComplexityInput ComplexityInput::vc_dimension(std::uint64_t dim) {
  if (dim < 1) throw std::invalid_argument("ComplexityInput: VC dimension must be >= 1");
  return {Kind::vc_dimension, static_cast<double>(dim)};
}

ComplexityInput ComplexityInput::rademacher(double rn) {
  if (!(rn >= 0.0)) throw std::invalid_argument("ComplexityInput: Rademacher complexity must be >= 0");
  return {Kind::rademacher, rn};
}

double dkw_epsilon(long n, double delta) {
  check_n(n, "dkw_epsilon");
  check_delta(delta, "dkw_epsilon");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

ConservativeLevel conservative_oracle_level(long n_c, double alpha, double delta) {
  check_n(n_c, "conservative_oracle_level");
  check_alpha(alpha, "conservative_oracle_level");
  check_delta(delta, "conservative_oracle_level");
  ConservativeLevel out;
  const double rank = (1.0 - alpha) * static_cast<double>(n_c + 1);
  out.rank_hypothesis_warning = std::abs(rank - std::round(rank)) < 1e-9;
  out.level = 1.0 - alpha + (1.0 - alpha) / static_cast<double>(n_c) + dkw_epsilon(n_c, delta);
  if (out.level >= 1.0) {
    out.level = 1.0;
    out.saturated = true;
  }
  return out;
}

double excess_volume_bound_fixed_f(long n_c, double alpha, double delta, const HolderParams& h) {
  check_n(n_c, "excess_volume_bound_fixed_f");
  check_alpha(alpha, "excess_volume_bound_fixed_f");
  check_delta(delta, "excess_volume_bound_fixed_f");
  check_holder(h, "excess_volume_bound_fixed_f");
  check_calibration_hypothesis(n_c, alpha, delta, h, "excess_volume_bound_fixed_f");
  const double inner = 1.0 / static_cast<double>(n_c) + dkw_epsilon(n_c, delta);
  return 2.0 * h.l * std::pow(inner, h.gamma);
}

double phi_closed_form(const ComplexityInput& c, long n, double delta) {
  check_n(n, "phi_closed_form");
  check_delta(delta, "phi_closed_form");
  const double dn = static_cast<double>(n);
  switch (c.kind) {
    case ComplexityInput::Kind::finite_class:
      return std::sqrt(std::log(2.0 * c.value / delta) / (2.0 * dn));
    case ComplexityInput::Kind::rademacher:
      return 2.0 * c.value + std::sqrt(std::log(1.0 / delta) / (2.0 * dn));
    case ComplexityInput::Kind::vc_dimension: {
      if (c.value > dn) throw std::invalid_argument("phi_closed_form: VC dimension must be <= n");
      const double vc = c.value;
      return std::sqrt(8.0 * vc * std::log(std::exp(1.0) * dn / vc) / dn) +
             std::sqrt(std::log(1.0 / delta) / (2.0 * dn));
    }
  }
  throw std::logic_error("phi_closed_form: unknown complexity kind");
}

EffortBound effort_excess_volume_bound(long n_c, long n_l, double alpha, double delta,
                                       const HolderParams& h, const ComplexityInput& c) {
  check_n(n_c, "effort_excess_volume_bound");
  check_n(n_l, "effort_excess_volume_bound");
  check_alpha(alpha, "effort_excess_volume_bound");
  check_delta(delta, "effort_excess_volume_bound");
  check_holder(h, "effort_excess_volume_bound");
  check_calibration_hypothesis(n_c, alpha, delta, h, "effort_excess_volume_bound");
  const double phi = phi_closed_form(c, n_l, delta);
  if (phi > h.r) {
    hypothesis_failure("effort_excess_volume_bound", "phi(F, delta, n_l) <= r", phi, h.r);
  }
  EffortBound out;
  out.calibration_term = excess_volume_bound_fixed_f(n_c, alpha, delta, h);
  out.learning_term = 4.0 * h.l * std::pow(phi, h.gamma);
  out.total = out.calibration_term + out.learning_term;
  return out;
}

double nested_length_bound(double a, double b, long n_c, double alpha, double delta,
                           const HolderParams& h) {
  if (!(a >= 0.0)) throw std::invalid_argument("nested_length_bound: a must be nonnegative");
  if (!(b >= 0.0)) throw std::invalid_argument("nested_length_bound: b must be nonnegative");
  check_n(n_c, "nested_length_bound");
  check_alpha(alpha, "nested_length_bound");
  check_delta(delta, "nested_length_bound");
  check_holder(h, "nested_length_bound");
  const double inner =
      (1.0 - alpha) / static_cast<double>(n_c) +
      std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n_c)));
  if (inner > h.r) {
    hypothesis_failure("nested_length_bound", "(1-alpha)/n_c + sqrt(log(1/delta)/(2 n_c)) <= r",
                       inner, h.r);
  }
  return a * h.l * std::pow(inner, h.gamma);
}

AdaptiveBound adaptive_excess_volume_bound(long n_c, double delta, const HolderParams& h, double phi,
                                           double psi) {
  check_n(n_c, "adaptive_excess_volume_bound");
  check_delta(delta, "adaptive_excess_volume_bound");
  check_holder(h, "adaptive_excess_volume_bound");
  if (!(phi >= 0.0)) throw std::invalid_argument("adaptive_excess_volume_bound: phi must be >= 0");
  if (!(psi >= 0.0)) throw std::invalid_argument("adaptive_excess_volume_bound: psi must be >= 0");
  const double nc1 = static_cast<double>(n_c + 1);
  const double base = 1.0 / nc1 + std::sqrt(std::log(1.0 / delta) / nc1);
  if (base > h.r) {
    hypothesis_failure("adaptive_excess_volume_bound",
                       "1/(n_c+1) + sqrt(log(1/delta)/(n_c+1)) <= r", base, h.r);
  }
  if (phi > h.r) {
    hypothesis_failure("adaptive_excess_volume_bound", "phi(F, S, delta, n_l) <= r", phi, h.r);
  }
  AdaptiveBound out;
  out.size_term = 4.0 * psi;
  out.quantile_term = 2.0 * h.l * std::pow(base + 2.0 * phi, h.gamma);
  out.total = out.size_term + out.quantile_term;
  return out;
}

}  // namespace ecr
