#include "oslab/subspace.hpp"

#include "oslab/errors.hpp"

#include <string>

namespace oslab {

namespace {

constexpr double kOrthonormalTol = 1e-10;
constexpr double kNestingTol = 1e-9;
constexpr double kDirectSumTol = 1e-14;

}  // namespace

Subspace::Subspace(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.cols() > basis_.rows()) {
    throw InvalidArgument("Subspace: more basis vectors than ambient dimension");
  }
  if (!basis_.allFinite()) throw NonFinite("Subspace: non-finite basis");
  if (basis_.cols() > 0) {
    const Matrix gram = basis_.transpose() * basis_;
    const double err = (gram - Matrix::Identity(basis_.cols(), basis_.cols())).cwiseAbs().maxCoeff();
    if (err > kOrthonormalTol) {
      throw InvalidArgument("Subspace: basis not orthonormal (error " + std::to_string(err) + ")");
    }
  }
}

Subspace Subspace::span_of(const Matrix& vectors, double rank_tol) {
  const auto m = vectors.rows();
  const auto k = vectors.cols();
  if (k == 0) return zero(static_cast<int>(m));
  if (k > m) throw InvalidArgument("Subspace::span_of: more vectors than ambient dimension");
  Eigen::JacobiSVD<Matrix> solver(vectors, Eigen::ComputeThinU);
  const Vector& s = solver.singularValues();
  if (!(s(k - 1) > rank_tol * s(0))) {
    throw InvalidArgument("Subspace::span_of: vectors are numerically dependent");
  }
  return Subspace(Matrix(solver.matrixU().leftCols(k)));
}

Subspace Subspace::zero(int m) { return Subspace(Matrix(m, 0)); }

Subspace Subspace::whole(int m) { return Subspace(Matrix::Identity(m, m)); }

Subspace Subspace::coordinate(int m, const std::vector<int>& indices) {
  Matrix b = Matrix::Zero(m, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const int i = indices[c];
    if (i < 0 || i >= m) throw InvalidArgument("Subspace::coordinate: index out of range");
    b(i, static_cast<Eigen::Index>(c)) = 1.0;
  }
  return Subspace(std::move(b));
}

Subspace Subspace::complement() const {
  const auto m = basis_.rows();
  const auto k = basis_.cols();
  if (k == 0) return whole(static_cast<int>(m));
  if (k == m) return zero(static_cast<int>(m));
  Eigen::HouseholderQR<Matrix> qr(basis_);
  const Matrix q = qr.householderQ() * Matrix::Identity(m, m);
  return Subspace(Matrix(q.rightCols(m - k)));
}

bool Subspace::contains(const Subspace& other, double tol) const {
  if (other.ambient_dim() != ambient_dim()) return false;
  if (other.dim() == 0) return true;
  const Matrix residual = other.basis() - basis_ * (basis_.transpose() * other.basis());
  return residual.norm() <= tol;
}

// ---------------------------------------------------------------------------

Signature::Signature(int ambient_dim, std::vector<int> dims) : m_(ambient_dim), dims_(std::move(dims)) {
  if (m_ < 1) throw InvalidArgument("Signature: ambient dimension must be positive");
  int prev = 0;
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    const int d = dims_[j];
    if (d <= prev || d >= m_) {
      throw InvalidArgument("Signature: entry " + std::to_string(j + 1) + " (" + std::to_string(d) +
                            ") breaks 1 <= t_1 < ... < t_k < m=" + std::to_string(m_));
    }
    prev = d;
  }
}

int Signature::padded(int j) const {
  if (j <= 0) return 0;
  if (j > size()) return m_;
  return dims_[static_cast<std::size_t>(j - 1)];
}

Signature Signature::complement() const {
  std::vector<int> out;
  out.reserve(dims_.size());
  for (auto it = dims_.rbegin(); it != dims_.rend(); ++it) out.push_back(m_ - *it);
  return Signature(m_, std::move(out));
}

// ---------------------------------------------------------------------------

Flag::Flag(Signature signature, std::vector<Subspace> components)
    : signature_(std::move(signature)), components_(std::move(components)) {
  if (static_cast<int>(components_.size()) != signature_.size()) {
    throw DimensionMismatch("Flag: component count differs from signature length");
  }
  for (int j = 0; j < signature_.size(); ++j) {
    const Subspace& c = components_[static_cast<std::size_t>(j)];
    if (c.ambient_dim() != signature_.ambient_dim() || c.dim() != signature_[j]) {
      throw DimensionMismatch("Flag: component " + std::to_string(j + 1) + " has wrong dimension");
    }
    if (j > 0 && !c.contains(components_[static_cast<std::size_t>(j - 1)], kNestingTol)) {
      throw InvalidArgument("Flag: component " + std::to_string(j) + " is not contained in component " +
                            std::to_string(j + 1));
    }
  }
}

Decomposition::Decomposition(Signature signature, std::vector<Subspace> components)
    : signature_(std::move(signature)), components_(std::move(components)) {
  if (static_cast<int>(components_.size()) != signature_.size() + 1) {
    throw DimensionMismatch("Decomposition: expected signature length + 1 components");
  }
  for (int j = 0; j <= signature_.size(); ++j) {
    const Subspace& c = components_[static_cast<std::size_t>(j)];
    const int want = signature_.padded(j + 1) - signature_.padded(j);
    if (c.ambient_dim() != signature_.ambient_dim() || c.dim() != want) {
      throw DimensionMismatch("Decomposition: component " + std::to_string(j + 1) +
                              " has wrong dimension");
    }
  }
  if (!(stacked_min_singular_value() > kDirectSumTol)) {
    throw InvalidArgument("Decomposition: components do not form a direct sum");
  }
}

double Decomposition::stacked_min_singular_value() const {
  const int m = signature_.ambient_dim();
  Matrix stacked(m, m);
  Eigen::Index col = 0;
  for (const auto& c : components_) {
    stacked.middleCols(col, c.dim()) = c.basis();
    col += c.dim();
  }
  Eigen::JacobiSVD<Matrix> solver(stacked);
  return solver.singularValues()(m - 1);
}

}  // namespace oslab
