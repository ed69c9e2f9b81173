#pragma once

// Matrix primitives built on singular value decompositions.

#include "oslab/subspace.hpp"

#include <cstdint>
#include <vector>

namespace oslab {

/// Relative margin above 1 required before a gap ratio counts as a gap.
inline constexpr double kGapTolerance = 1e-9;
/// Singular values at or below this are treated as exact zeros.
inline constexpr double kUnderflowThreshold = 1e-300;

struct SingularData {
  Vector values;  ///< s_1 >= ... >= s_m >= 0
  Matrix left;    ///< columns u_j
  Matrix right;   ///< columns v_j, g v_j = s_j u_j

  int dim() const { return static_cast<int>(values.size()); }
};

/// Full SVD of a square matrix. Each right singular vector is signed so that
/// its largest-magnitude coordinate is positive; the matching left vector is
/// flipped with it. Throws NonFinite on NaN/inf entries.
SingularData svd(const Matrix& g);

Vector singular_values(const Matrix& g);

/// Largest singular value.
double operator_norm(const Matrix& g);

void require_finite(const Matrix& g, const char* what);
void require_square(const Matrix& g, const char* what);

/// s_k(g) / s_{k+1}(g) for 1 <= k < m. Returns +inf when s_{k+1} underflows
/// while s_k does not, and 1 when both underflow.
double gap_ratio(const Matrix& g, int k);

/// Span of the first k right singular vectors. Throws DegenerateGap when
/// gr_k(g) <= 1 + kGapTolerance.
Subspace most_expanding(const Matrix& g, int k);

/// The flag (most_expanding(g, t_1), ..., most_expanding(g, t_k)).
Flag most_expanding_flag(const Matrix& g, const Signature& tau);

/// Lexicographically ordered k-subsets of {0, ..., m-1}.
std::vector<std::vector<int>> k_subsets(int m, int k);

/// Binomial coefficient C(m, k).
std::int64_t binomial(int m, int k);

/// k-th exterior power in the lexicographic basis e_I; entry (I, J) is the
/// minor det g[I, J]. k = 0 gives the 1 x 1 identity.
Matrix exterior_power(const Matrix& g, int k);

/// Moore-Penrose pseudo-inverse. Singular values below `rel_cutoff * s_1`
/// are treated as zero.
Matrix pseudo_inverse(const Matrix& g, double rel_cutoff = 1e-13);

/// Expansion rift ||g1 g0|| / (||g1|| ||g0||). Throws ZeroMatrix.
double rift(const Matrix& g0, const Matrix& g1);

/// ||g1 - g2|| / max(||g1||, ||g2||). Throws ZeroMatrix when both vanish.
double relative_distance(const Matrix& g1, const Matrix& g2);

/// Recovers the k-plane encoded by a (numerically) decomposable k-vector given
/// in lexicographic coordinates of the exterior power of R^m.
Subspace subspace_from_multivector(const Vector& w, int m, int k);

/// A matrix stored as exp(log_scale) * factor with ||factor|| = 1 after each
/// renormalization, so long products never overflow. The zero matrix has a
/// zero factor and log_scale = -inf.
class ScaledMatrix {
 public:
  ScaledMatrix() = default;
  explicit ScaledMatrix(const Matrix& g);
  ScaledMatrix(const Matrix& factor, double log_scale);

  static ScaledMatrix identity(int m);

  const Matrix& factor() const { return factor_; }
  double log_scale() const { return log_scale_; }
  int rows() const { return static_cast<int>(factor_.rows()); }
  int cols() const { return static_cast<int>(factor_.cols()); }
  bool is_zero() const;

  /// log of the operator norm; -inf for the zero matrix.
  double log_norm() const;

  /// this <- g * this.
  void left_multiply(const Matrix& g);
  /// this <- this * g.
  void right_multiply(const Matrix& g);

  ScaledMatrix transposed() const;
  /// exp(log_scale) * factor. Overflows for long products; intended for tests.
  Matrix to_matrix() const;

  friend ScaledMatrix operator*(const ScaledMatrix& a, const ScaledMatrix& b);

 private:
  void renormalize();

  Matrix factor_;
  double log_scale_ = 0.0;
};

}  // namespace oslab
