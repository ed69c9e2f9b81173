#pragma once

// Value types for points of Grassmannians, flag manifolds and the space of
// direct-sum decompositions. Operations on them live in grassmann.hpp.

#include <Eigen/Dense>

#include <vector>

namespace oslab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A linear subspace of R^m stored as an m x k column-orthonormal frame.
/// The zero subspace (k = 0) and the whole space (k = m) are allowed so that
/// the boundary conventions of flags and decompositions need no special case.
class Subspace {
 public:
  Subspace() = default;

  /// Wraps an orthonormal frame. Throws InvalidArgument when the columns are
  /// not orthonormal to 1e-10.
  explicit Subspace(Matrix basis);

  /// Orthonormal basis of the column span of `vectors`. Throws when the
  /// vectors are numerically dependent (relative tolerance `rank_tol`).
  static Subspace span_of(const Matrix& vectors, double rank_tol = 1e-12);
  static Subspace zero(int m);
  static Subspace whole(int m);
  /// span(e_i : i in indices), 0-based.
  static Subspace coordinate(int m, const std::vector<int>& indices);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }

  Matrix projector() const { return basis_ * basis_.transpose(); }
  Subspace complement() const;
  bool contains(const Subspace& other, double tol = 1e-9) const;

 private:
  Matrix basis_;
};

/// Strictly increasing dimensions 1 <= t_1 < ... < t_k < m. Empty is allowed.
class Signature {
 public:
  Signature() = default;
  Signature(int ambient_dim, std::vector<int> dims);

  int ambient_dim() const { return m_; }
  int size() const { return static_cast<int>(dims_.size()); }
  bool empty() const { return dims_.empty(); }
  int operator[](int j) const { return dims_[static_cast<std::size_t>(j)]; }
  const std::vector<int>& dims() const { return dims_; }

  /// Dimension with the conventions t_0 = 0 and t_{k+1} = m (0-based j runs
  /// from 0 to size()+1).
  int padded(int j) const;

  /// (m - t_k, ..., m - t_1).
  Signature complement() const;

  friend bool operator==(const Signature& a, const Signature& b) {
    return a.m_ == b.m_ && a.dims_ == b.dims_;
  }

 private:
  int m_ = 0;
  std::vector<int> dims_;
};

/// Nested subspaces F_1 < F_2 < ... < F_k with dim F_j = t_j. Components are
/// stored cumulatively.
class Flag {
 public:
  Flag() = default;
  Flag(Signature signature, std::vector<Subspace> components);

  const Signature& signature() const { return signature_; }
  int ambient_dim() const { return signature_.ambient_dim(); }
  int size() const { return signature_.size(); }
  const Subspace& operator[](int j) const { return components_[static_cast<std::size_t>(j)]; }
  const std::vector<Subspace>& components() const { return components_; }

 private:
  Signature signature_;
  std::vector<Subspace> components_;
};

/// R^m = E_1 + ... + E_{k+1} (direct), dim E_j = t_j - t_{j-1}.
class Decomposition {
 public:
  Decomposition() = default;
  Decomposition(Signature signature, std::vector<Subspace> components);

  const Signature& signature() const { return signature_; }
  int ambient_dim() const { return signature_.ambient_dim(); }
  int size() const { return static_cast<int>(components_.size()); }
  const Subspace& operator[](int j) const { return components_[static_cast<std::size_t>(j)]; }
  const std::vector<Subspace>& components() const { return components_; }

  /// Smallest singular value of the stacked component bases; positive iff the
  /// sum is direct.
  double stacked_min_singular_value() const;

 private:
  Signature signature_;
  std::vector<Subspace> components_;
};

}  // namespace oslab
