#include "ecr/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ecr {

namespace {

void require_finite(std::span<const double> values, const char* where) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(where) + ": sample contains a non-finite entry");
  }
}

}  // namespace

QuantileValue empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (!(q > 0.0)) throw std::invalid_argument("empirical_quantile: level must be positive");
  require_finite(values, "empirical_quantile");
  if (q > 1.0) return QuantileValue::infinite();

  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> buf(values.begin(), values.end());
  std::nth_element(buf.begin(), buf.begin() + (rank - 1), buf.end());
  return QuantileValue::finite(buf[rank - 1]);
}

double pinball_loss(double u, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("pinball_loss: level must lie in (0,1)");
  return u >= 0.0 ? q * u : (q - 1.0) * u;
}

double gamma_smooth(double z, const SmoothingKernel& k) {
  if (z <= -k.epsilon) return 1.0;
  if (z >= k.epsilon) return 0.0;
  const double u = z / k.epsilon;
  const double u3 = u * u * u;
  return (15.0 / 16.0) * (-0.2 * u3 * u * u + (2.0 / 3.0) * u3 - u + 8.0 / 15.0);
}

double gamma_smooth_derivative(double z, const SmoothingKernel& k) {
  if (std::abs(z) >= k.epsilon) return 0.0;
  const double d = k.epsilon * k.epsilon - z * z;
  const double e = k.epsilon;
  return -(15.0 / 16.0) * d * d / (e * e * e * e * e);
}

double smoothed_cdf(std::span<const double> values, double t, const SmoothingKernel& k) {
  if (values.empty()) throw std::invalid_argument("smoothed_cdf: empty sample");
  require_finite(values, "smoothed_cdf");
  double acc = 0.0;
  for (double v : values) acc += gamma_smooth(v - t, k);
  return acc / static_cast<double>(values.size());
}

double smoothed_quantile(std::span<const double> values, double q, const SmoothingKernel& k) {
  if (values.empty()) throw std::invalid_argument("smoothed_quantile: empty sample");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("smoothed_quantile: level must lie in (0,1)");
  require_finite(values, "smoothed_quantile");

  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn - k.epsilon;
  double hi = *mx + k.epsilon;
  // invariant: cdf(lo) < q <= cdf(hi); cdf(lo) = 0 and cdf(hi) = 1 by the
  // kernel's saturation, so the bracket always holds
  if (!(smoothed_cdf(values, lo, k) < q) || !(smoothed_cdf(values, hi, k) >= q)) {
    throw std::logic_error("smoothed_quantile: bracket invariant violated");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (smoothed_cdf(values, mid, k) >= q) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double nested_score_infimum(const std::function<bool(double)>& contains, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("nested_score_infimum: bracket must satisfy lo < hi");
  double width = hi - lo;
  for (int i = 0; contains(lo); ++i) {
    if (i >= 128) throw std::invalid_argument("nested_score_infimum: lower bracket never leaves the set");
    lo -= width;
    width *= 2.0;
  }
  width = hi - lo;
  for (int i = 0; !contains(hi); ++i) {
    if (i >= 128) throw std::invalid_argument("nested_score_infimum: set never contains the point");
    hi += width;
    width *= 2.0;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (contains(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double absolute_residual_score(double mu, double y) { return std::abs(y - mu); }

double scaled_residual_score(double mu, double sigma, double y) {
  if (!(sigma > 0.0)) throw std::invalid_argument("scaled_residual_score: sigma must be positive");
  return std::abs(y - mu) / sigma;
}

double cqr_score(double q_lo, double q_hi, double y) { return std::max(q_lo - y, y - q_hi); }

}  // namespace ecr
