#pragma once

// Linear cocycles over a base system and their overflow-safe iterates.

#include "oslab/dynamics.hpp"
#include "oslab/linalg.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace oslab {

/// Evaluates A(x). The base system is passed so that generators can read
/// torus coordinates or shift symbols of the phase.
using Generator = std::function<Matrix(const BaseSystem&, const Phase&)>;

/// A measurable family of m x m matrices x -> A(x) with an L-infinity bound.
class Cocycle {
 public:
  Cocycle(int dim, Generator generator, double sup_norm_bound, std::string label);

  int dim() const { return dim_; }
  double sup_norm_bound() const { return sup_norm_bound_; }
  const std::string& label() const { return label_; }

  /// A(x). Throws NonFinite or DimensionMismatch when the generator misbehaves.
  Matrix operator()(const BaseSystem& s, const Phase& x) const;

 private:
  int dim_;
  Generator generator_;
  double sup_norm_bound_;
  std::string label_;
};

/// A^{(n)}(x) = A(T^{n-1}x) ... A(x) for n >= 1, started at `start`.
struct IterateResult {
  ScaledMatrix value;
  std::int64_t n = 0;
  Phase start;
  /// Numerical rank; only set by backward_iterate (-1 otherwise).
  int rank = -1;
};

IterateResult iterate(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n);

/// A^{(n)}(x) for every n in the increasing list `scales`, in one pass.
std::vector<ScaledMatrix> iterate_scales(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                         const std::vector<std::int64_t>& scales);

/// (A*)^{(n)}(x) = A^{(n)}(T^{-n}x)^T.
IterateResult adjoint_iterate(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n);

/// A^{(-n)}(x) = A^{(n)}(T^{-n}x)^+ with singular values below 1e-13 s_1
/// discarded. A rank drop is reported in `rank`, not thrown.
IterateResult backward_iterate(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n);

/// x -> wedge_k A(x), of dimension C(m, k).
Cocycle exterior_cocycle(const Cocycle& a, int k);

/// x -> A(T^{-1}x)^T, to be iterated over s.inverse(). Its n-th iterate at x
/// is the adjoint iterate of `a`.
Cocycle adjoint_cocycle(const Cocycle& a, const BaseSystem& s);

/// Largest ||A(x)|| over the phases; throws InvalidArgument if it exceeds the
/// declared bound.
double check_sup_bound(const Cocycle& a, const BaseSystem& s, const std::vector<Phase>& phases);

/// log ||wedge_k A^{(n)}(x)|| for k = 0..kmax at each requested scale.
/// Row i corresponds to scales[i]; entry 0 is always 0. Every exterior power
/// is iterated as its own renormalized product, so small singular values are
/// resolved even when they are far below machine precision relative to s_1.
struct ExteriorIterates {
  std::vector<std::int64_t> scales;
  std::vector<std::vector<ScaledMatrix>> powers;  ///< powers[i][k-1] = wedge_k A^{(scales[i])}(x)
  double log_norm(std::size_t i, int k) const;
};

ExteriorIterates exterior_iterates(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                   const std::vector<std::int64_t>& scales, int kmax);

// Catalog -------------------------------------------------------------------

Cocycle constant_cocycle(const Matrix& g, std::string label = "constant");

/// x -> [[E - 2 lambda cos(2 pi x), -1], [1, 0]] over a 1-D rotation.
Cocycle schrodinger_cocycle(double energy, double coupling);

/// i.i.d. diagonal cocycle over a shift: coordinate i takes the values
/// values[i]. The shift symbol is decoded in mixed radix (coordinate 0 least
/// significant), so the alphabet size must be the product of the list sizes.
Cocycle diagonal_random_cocycle(const std::vector<std::vector<double>>& values);

/// `count` Gaussian m x m matrices (entries N(0, scale^2), seeded) selected by
/// the shift symbol.
Cocycle random_glm_cocycle(int m, int count, std::uint64_t seed, double scale = 1.0);

/// Finitely many matrices indexed by the shift symbol (empty breakpoints) or
/// by the interval [b_{i-1}, b_i) of the first torus coordinate.
Cocycle table_cocycle(const std::vector<Matrix>& matrices, const std::vector<double>& breakpoints,
                      bool symbolic);

/// Names accepted by catalog().
const std::vector<std::string>& catalog_names();

/// Builds a catalog cocycle from a JSON parameter object. Throws
/// InvalidArgument naming the offending parameter.
Cocycle catalog(const std::string& name, const nlohmann::json& params);

/// Parses row-major matrices from CSV text: one matrix per non-empty line,
/// m*m comma-separated entries.
std::vector<Matrix> parse_matrix_csv(const std::string& text);

}  // namespace oslab
