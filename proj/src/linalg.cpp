#include "oslab/linalg.hpp"

#include "oslab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace oslab {

void require_finite(const Matrix& g, const char* what) {
  if (!g.allFinite()) {
    throw NonFinite(std::string(what) + ": matrix has non-finite entries");
  }
}

void require_square(const Matrix& g, const char* what) {
  if (g.rows() != g.cols() || g.rows() == 0) {
    throw DimensionMismatch(std::string(what) + ": expected a non-empty square matrix");
  }
}

SingularData svd(const Matrix& g) {
  require_square(g, "svd");
  require_finite(g, "svd");
  Eigen::JacobiSVD<Matrix> solver(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SingularData out{solver.singularValues(), solver.matrixU(), solver.matrixV()};
  for (Eigen::Index j = 0; j < out.right.cols(); ++j) {
    Eigen::Index arg = 0;
    out.right.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.right(arg, j) < 0) {
      out.right.col(j) *= -1.0;
      out.left.col(j) *= -1.0;
    }
  }
  return out;
}

Vector singular_values(const Matrix& g) {
  require_finite(g, "singular_values");
  Eigen::JacobiSVD<Matrix> solver(g);
  return solver.singularValues();
}

double operator_norm(const Matrix& g) {
  if (g.size() == 0) return 0.0;
  if (g.rows() == 1 && g.cols() == 1) return std::abs(g(0, 0));
  if (g.rows() == 2 && g.cols() == 2) {
    // Largest root of s^4 - |g|_F^2 s^2 + det^2 = 0.
    const double f2 = g.squaredNorm();
    const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    const double disc = std::max(0.0, (f2 - 2.0 * det) * (f2 + 2.0 * det));
    return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
  }
  Eigen::JacobiSVD<Matrix> solver(g);
  return solver.singularValues()(0);
}

namespace {

double ratio_with_sentinel(double top, double next) {
  const bool top_zero = top <= kUnderflowThreshold;
  const bool next_zero = next <= kUnderflowThreshold;
  if (next_zero && !top_zero) return std::numeric_limits<double>::infinity();
  if (next_zero && top_zero) return 1.0;
  return top / next;
}

void check_gap_index(int m, int k, const char* what) {
  if (k < 1 || k >= m) {
    throw InvalidArgument(std::string(what) + ": index k=" + std::to_string(k) +
                          " outside [1, " + std::to_string(m - 1) + "]");
  }
}

}  // namespace

double gap_ratio(const Matrix& g, int k) {
  require_square(g, "gap_ratio");
  const int m = static_cast<int>(g.rows());
  check_gap_index(m, k, "gap_ratio");
  const Vector s = singular_values(g);
  return ratio_with_sentinel(s(k - 1), s(k));
}

Subspace most_expanding(const Matrix& g, int k) {
  require_square(g, "most_expanding");
  const int m = static_cast<int>(g.rows());
  check_gap_index(m, k, "most_expanding");
  const SingularData sd = svd(g);
  const double gr = ratio_with_sentinel(sd.values(k - 1), sd.values(k));
  if (!(gr > 1.0 + kGapTolerance)) {
    throw DegenerateGap(k, "most_expanding: no singular gap at k=" + std::to_string(k));
  }
  return Subspace(sd.right.leftCols(k));
}

Flag most_expanding_flag(const Matrix& g, const Signature& tau) {
  require_square(g, "most_expanding_flag");
  if (tau.ambient_dim() != g.rows()) {
    throw DimensionMismatch("most_expanding_flag: signature ambient dimension differs from matrix");
  }
  const SingularData sd = svd(g);
  std::vector<Subspace> parts;
  parts.reserve(static_cast<std::size_t>(tau.size()));
  for (int j = 0; j < tau.size(); ++j) {
    const int k = tau[j];
    const double gr = ratio_with_sentinel(sd.values(k - 1), sd.values(k));
    if (!(gr > 1.0 + kGapTolerance)) {
      throw DegenerateGap(k, "most_expanding_flag: no singular gap at t_" + std::to_string(j + 1) +
                                 "=" + std::to_string(k));
    }
    parts.emplace_back(Matrix(sd.right.leftCols(k)));
  }
  return Flag(tau, std::move(parts));
}

std::int64_t binomial(int m, int k) {
  if (k < 0 || k > m) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (m - k + i) / i;
  return r;
}

std::vector<std::vector<int>> k_subsets(int m, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > m) return out;
  std::vector<int> cur(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) cur[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

Matrix exterior_power(const Matrix& g, int k) {
  require_square(g, "exterior_power");
  const int m = static_cast<int>(g.rows());
  if (k < 0 || k > m) {
    throw InvalidArgument("exterior_power: k=" + std::to_string(k) + " outside [0, m]");
  }
  if (k == 0) return Matrix::Identity(1, 1);
  if (k == 1) return g;
  const auto subsets = k_subsets(m, k);
  const auto d = static_cast<Eigen::Index>(subsets.size());
  Matrix out(d, d);
  Matrix minor(k, k);
  for (Eigen::Index I = 0; I < d; ++I) {
    const auto& rows = subsets[static_cast<std::size_t>(I)];
    for (Eigen::Index J = 0; J < d; ++J) {
      const auto& cols = subsets[static_cast<std::size_t>(J)];
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
          minor(a, b) = g(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
        }
      }
      out(I, J) = minor.determinant();
    }
  }
  return out;
}

Matrix pseudo_inverse(const Matrix& g, double rel_cutoff) {
  require_square(g, "pseudo_inverse");
  const SingularData sd = svd(g);
  const double top = sd.values(0);
  Vector inv = Vector::Zero(sd.values.size());
  if (top > kUnderflowThreshold) {
    for (Eigen::Index i = 0; i < sd.values.size(); ++i) {
      if (sd.values(i) > rel_cutoff * top) inv(i) = 1.0 / sd.values(i);
    }
  }
  return sd.right * inv.asDiagonal() * sd.left.transpose();
}

double rift(const Matrix& g0, const Matrix& g1) {
  require_square(g0, "rift");
  require_square(g1, "rift");
  if (g0.rows() != g1.rows()) throw DimensionMismatch("rift: matrices of different size");
  const double n0 = operator_norm(g0);
  const double n1 = operator_norm(g1);
  if (n0 <= kUnderflowThreshold || n1 <= kUnderflowThreshold) {
    throw ZeroMatrix("rift: zero matrix argument");
  }
  // Normalize first so that huge factors do not overflow the product.
  return operator_norm((g1 / n1) * (g0 / n0));
}

double relative_distance(const Matrix& g1, const Matrix& g2) {
  if (g1.rows() != g2.rows() || g1.cols() != g2.cols()) {
    throw DimensionMismatch("relative_distance: matrices of different size");
  }
  const double scale = std::max(operator_norm(g1), operator_norm(g2));
  if (scale <= kUnderflowThreshold) throw ZeroMatrix("relative_distance: both matrices vanish");
  return operator_norm((g1 - g2) / scale);
}

Subspace subspace_from_multivector(const Vector& w, int m, int k) {
  if (k < 0 || k > m) throw InvalidArgument("subspace_from_multivector: k outside [0, m]");
  if (w.size() != binomial(m, k)) {
    throw DimensionMismatch("subspace_from_multivector: coordinate vector has wrong length");
  }
  if (k == 0) return Subspace::zero(m);
  if (k == m) return Subspace::whole(m);
  if (!(w.norm() > 0.0)) throw ZeroMatrix("subspace_from_multivector: zero multivector");

  const auto upper = k_subsets(m, k);
  std::map<std::vector<int>, Eigen::Index> index;
  for (std::size_t i = 0; i < upper.size(); ++i) index.emplace(upper[i], static_cast<Eigen::Index>(i));

  // Contracting w against each (k-1)-subset J yields u_J with
  // u_J[i] = sign * w[J + {i}]; every u_J lies in the encoded plane and
  // together they span it.
  const auto lower = k_subsets(m, k - 1);
  Matrix u = Matrix::Zero(m, static_cast<Eigen::Index>(lower.size()));
  std::vector<int> merged;
  for (std::size_t c = 0; c < lower.size(); ++c) {
    const auto& J = lower[c];
    for (int i = 0; i < m; ++i) {
      if (std::find(J.begin(), J.end(), i) != J.end()) continue;
      merged = J;
      const auto pos = std::upper_bound(merged.begin(), merged.end(), i) - merged.begin();
      merged.insert(merged.begin() + pos, i);
      const double sign = (pos % 2 == 0) ? 1.0 : -1.0;
      u(i, static_cast<Eigen::Index>(c)) = sign * w(index.at(merged));
    }
  }
  Eigen::JacobiSVD<Matrix> solver(u, Eigen::ComputeFullU);
  return Subspace(Matrix(solver.matrixU().leftCols(k)));
}

// ---------------------------------------------------------------------------

ScaledMatrix::ScaledMatrix(const Matrix& g) : factor_(g), log_scale_(0.0) {
  require_finite(g, "ScaledMatrix");
  renormalize();
}

ScaledMatrix::ScaledMatrix(const Matrix& factor, double log_scale)
    : factor_(factor), log_scale_(log_scale) {
  require_finite(factor, "ScaledMatrix");
  renormalize();
}

ScaledMatrix ScaledMatrix::identity(int m) { return ScaledMatrix(Matrix::Identity(m, m), 0.0); }

bool ScaledMatrix::is_zero() const {
  return log_scale_ == -std::numeric_limits<double>::infinity();
}

double ScaledMatrix::log_norm() const {
  if (is_zero()) return log_scale_;
  return log_scale_ + std::log(operator_norm(factor_));
}

void ScaledMatrix::left_multiply(const Matrix& g) {
  factor_ = g * factor_;
  renormalize();
}

void ScaledMatrix::right_multiply(const Matrix& g) {
  factor_ = factor_ * g;
  renormalize();
}

ScaledMatrix ScaledMatrix::transposed() const {
  ScaledMatrix out;
  out.factor_ = factor_.transpose();
  out.log_scale_ = log_scale_;
  return out;
}

Matrix ScaledMatrix::to_matrix() const {
  if (is_zero()) return Matrix::Zero(factor_.rows(), factor_.cols());
  return std::exp(log_scale_) * factor_;
}

ScaledMatrix operator*(const ScaledMatrix& a, const ScaledMatrix& b) {
  ScaledMatrix out;
  out.factor_ = a.factor_ * b.factor_;
  out.log_scale_ = a.log_scale_ + b.log_scale_;
  out.renormalize();
  return out;
}

void ScaledMatrix::renormalize() {
  if (is_zero()) {
    factor_.setZero();
    return;
  }
  const double s = operator_norm(factor_);
  if (!(s > 0.0) || !std::isfinite(s)) {
    factor_.setZero();
    log_scale_ = -std::numeric_limits<double>::infinity();
    return;
  }
  factor_ /= s;
  log_scale_ += std::log(s);
}

}  // namespace oslab
