#include "oslab/grassmann.hpp"

#include "oslab/errors.hpp"

#include <algorithm>
#include <string>

namespace oslab {

double subspace_distance(const Subspace& e, const Subspace& f) {
  if (e.ambient_dim() != f.ambient_dim() || e.dim() != f.dim()) {
    throw DimensionMismatch("subspace_distance: subspaces of different dimensions");
  }
  const int k = e.dim();
  if (k == 0 || k == e.ambient_dim()) return 0.0;
  // For equal dimensions ||P_E - P_F|| = ||(I - P_F) E||; the latter keeps
  // full relative accuracy for nearby subspaces.
  const Matrix residual = e.basis() - f.basis() * (f.basis().transpose() * e.basis());
  Eigen::JacobiSVD<Matrix> solver(residual);
  return std::clamp(solver.singularValues()(0), 0.0, 1.0);
}

double flag_distance(const Flag& f, const Flag& g) {
  if (!(f.signature() == g.signature())) throw DimensionMismatch("flag_distance: signature mismatch");
  double d = 0.0;
  for (int j = 0; j < f.size(); ++j) d = std::max(d, subspace_distance(f[j], g[j]));
  return d;
}

double decomposition_distance(const Decomposition& d, const Decomposition& e) {
  if (!(d.signature() == e.signature())) {
    throw DimensionMismatch("decomposition_distance: signature mismatch");
  }
  double out = 0.0;
  for (int j = 0; j < d.size(); ++j) out = std::max(out, subspace_distance(d[j], e[j]));
  return out;
}

Flag complement_flag(const Flag& f) {
  std::vector<Subspace> parts;
  parts.reserve(static_cast<std::size_t>(f.size()));
  for (int j = f.size() - 1; j >= 0; --j) parts.push_back(f[j].complement());
  return Flag(f.signature().complement(), std::move(parts));
}

bool refines(const Signature& fine, const Signature& coarse) {
  const auto& big = fine.dims();
  return std::all_of(coarse.dims().begin(), coarse.dims().end(),
                     [&](int d) { return std::binary_search(big.begin(), big.end(), d); });
}

namespace {

// 1-based positions i_j in `fine` of each entry of `coarse`.
std::vector<int> refinement_positions(const Signature& fine, const Signature& coarse, const char* what) {
  if (fine.ambient_dim() != coarse.ambient_dim() || !refines(fine, coarse)) {
    throw NotARefinement(std::string(what) + ": target signature is not coarser");
  }
  std::vector<int> pos;
  pos.reserve(static_cast<std::size_t>(coarse.size()));
  const auto& big = fine.dims();
  for (int d : coarse.dims()) {
    pos.push_back(static_cast<int>(std::lower_bound(big.begin(), big.end(), d) - big.begin()) + 1);
  }
  return pos;
}

}  // namespace

Flag project_flag(const Flag& f, const Signature& coarse) {
  const auto pos = refinement_positions(f.signature(), coarse, "project_flag");
  std::vector<Subspace> parts;
  parts.reserve(pos.size());
  for (int i : pos) parts.push_back(f[i - 1]);
  return Flag(coarse, std::move(parts));
}

Decomposition project_decomposition(const Decomposition& d, const Signature& coarse) {
  auto pos = refinement_positions(d.signature(), coarse, "project_decomposition");
  pos.push_back(d.size());  // the last merged block runs to E_{k+1}
  std::vector<Subspace> parts;
  parts.reserve(pos.size());
  int prev = 0;
  const int m = d.ambient_dim();
  for (int upto : pos) {
    int cols = 0;
    for (int l = prev; l < upto; ++l) cols += d[l].dim();
    Matrix stacked(m, cols);
    Eigen::Index c = 0;
    for (int l = prev; l < upto; ++l) {
      stacked.middleCols(c, d[l].dim()) = d[l].basis();
      c += d[l].dim();
    }
    parts.push_back(upto - prev == 1 ? d[prev] : Subspace::span_of(stacked, 0.0));
    prev = upto;
  }
  return Decomposition(coarse, std::move(parts));
}

double alignment(const Subspace& e, const Subspace& f) {
  if (e.ambient_dim() != f.ambient_dim() || e.dim() != f.dim()) {
    throw DimensionMismatch("alignment: subspaces of different dimensions");
  }
  if (e.dim() == 0) return 1.0;
  const Matrix cross = e.basis().transpose() * f.basis();
  return std::min(1.0, std::abs(cross.determinant()));
}

namespace {

void require_complementary(const Flag& f, const Flag& g, const char* what) {
  if (!(g.signature() == f.signature().complement())) {
    throw DimensionMismatch(std::string(what) + ": flags must have complementary signatures");
  }
}

}  // namespace

double transversality(const Flag& f, const Flag& f_perp_sig) {
  require_complementary(f, f_perp_sig, "transversality");
  const int k = f.size();
  double theta = 1.0;
  for (int i = 0; i < k; ++i) {
    theta = std::min(theta, alignment(f[i], f_perp_sig[k - 1 - i].complement()));
  }
  return theta;
}

Decomposition intersect(const Flag& f, const Flag& f_perp_sig, double theta_min) {
  require_complementary(f, f_perp_sig, "intersect");
  const int k = f.size();
  const int m = f.ambient_dim();
  for (int i = 0; i < k; ++i) {
    const double a = alignment(f[i], f_perp_sig[k - 1 - i].complement());
    if (!(a > theta_min)) {
      throw NonTransversal(i + 1, "intersect: pair " + std::to_string(i + 1) +
                                      " has alignment " + std::to_string(a) + " <= cutoff");
    }
  }

  std::vector<Subspace> parts;
  parts.reserve(static_cast<std::size_t>(k + 1));
  const Subspace whole = Subspace::whole(m);
  for (int j = 0; j <= k; ++j) {
    const Subspace& a = (j < k) ? f[j] : whole;
    const Subspace& b = (j == 0) ? whole : f_perp_sig[k - j];
    const int want = f.signature().padded(j + 1) - f.signature().padded(j);
    const Matrix ca = a.complement().basis();
    const Matrix cb = b.complement().basis();
    if (ca.cols() + cb.cols() == 0) {
      parts.push_back(whole);
      continue;
    }
    // Vectors of the intersection are annihilated by both complementary
    // frames; take the null space of the stacked constraints.
    Matrix constraints(ca.cols() + cb.cols(), m);
    constraints << ca.transpose(), cb.transpose();
    Eigen::JacobiSVD<Matrix> solver(constraints, Eigen::ComputeFullV);
    parts.emplace_back(Matrix(solver.matrixV().rightCols(want)));
  }
  return Decomposition(f.signature(), std::move(parts));
}

double min_angle_sine(const Subspace& u, const Subspace& w) {
  if (u.ambient_dim() != w.ambient_dim() || u.dim() + w.dim() != u.ambient_dim()) {
    throw DimensionMismatch("min_angle_sine: dimensions must add up to the ambient dimension");
  }
  if (u.dim() == 0 || w.dim() == 0) return 1.0;
  const Matrix residual = u.basis() - w.basis() * (w.basis().transpose() * u.basis());
  Eigen::JacobiSVD<Matrix> solver(residual);
  return std::clamp(solver.singularValues()(u.dim() - 1), 0.0, 1.0);
}

}  // namespace oslab
