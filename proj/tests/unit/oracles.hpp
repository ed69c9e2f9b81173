#pragma once

// Independent reference computations shared by the unit tests.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = n(rng);
  return g;
}

/// Minor det g[rows, cols] by Eigen's LU.
inline double minor(const Eigen::MatrixXd& g, const std::vector<int>& rows, const std::vector<int>& cols) {
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = g(rows[i], cols[j]);
  return sub.determinant();
}

/// Sine of the largest principal angle between two column spans of equal
/// dimension: ||(I - Q_e Q_e^T) Q_f||.
inline double principal_sine(const Eigen::MatrixXd& e, const Eigen::MatrixXd& f) {
  const Eigen::MatrixXd qe = Eigen::HouseholderQR<Eigen::MatrixXd>(e).householderQ() *
                             Eigen::MatrixXd::Identity(e.rows(), e.cols());
  const Eigen::MatrixXd qf = Eigen::HouseholderQR<Eigen::MatrixXd>(f).householderQ() *
                             Eigen::MatrixXd::Identity(f.rows(), f.cols());
  const Eigen::MatrixXd r = qf - qe * (qe.transpose() * qf);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues()(0);
}

/// log C(n, k) through lgamma.
inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// P(Binomial(n, 1/2) in [lo, hi]), summed in the log domain.
inline double binomial_half_mass(int n, int lo, int hi) {
  double total = 0.0;
  for (int k = std::max(0, lo); k <= std::min(n, hi); ++k) total += std::exp(log_binomial(n, k) - n * std::log(2.0));
  return total;
}

}  // namespace oracle
