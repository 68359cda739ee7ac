#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

namespace ecr {

enum class Split : std::uint8_t { learn, cal, test };

// One materialized split: covariate rows paired with responses.
struct Subset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  Eigen::Index rows() const { return y.size(); }
  Eigen::Index dim() const { return x.cols(); }
};

// Covariate matrix and response vector with learn/cal/test labels.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<Split> split;
  // generator ground truth, present for the linear synthetic scenario
  std::optional<Eigen::VectorXd> linear_coeffs;

  Eigen::Index rows() const { return y.size(); }
  Eigen::Index dim() const { return x.cols(); }

  Subset subset(Split which) const;
};

inline Subset Dataset::subset(Split which) const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < rows(); ++i) {
    if (split[static_cast<std::size_t>(i)] == which) idx.push_back(i);
  }
  Subset s;
  s.x.resize(static_cast<Eigen::Index>(idx.size()), dim());
  s.y.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    s.x.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    s.y[static_cast<Eigen::Index>(i)] = y[idx[i]];
  }
  return s;
}

}  // namespace ecr
