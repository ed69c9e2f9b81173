#pragma once

// Finite-scale Oseledets data: most expanding directions, avalanche times,
// Avalanche Principle checks, filtrations, decompositions and their
// invariance and convergence diagnostics.

#include "oslab/cocycle.hpp"
#include "oslab/grassmann.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace oslab {

/// Admission constant c in kappa_ap <= c * eps_ap^2.
inline constexpr double kApAdmission = 0.01;
/// Reported conclusion bound: distances must not exceed kApBound * kappa_ap / eps_ap.
inline constexpr double kApBound = 100.0;
/// Subspace distances at or below this are indistinguishable from round-off.
inline constexpr double kDistanceFloor = 1e-13;

/// v^{(n)}_tau(A)(x): defined iff gr_{t_j}(A^{(n)}(x)) > 1 + kGapTolerance for
/// every j. `log_gap` is min_j log gr_{t_j} (+inf for empty tau).
struct PartialDirection {
  bool defined = false;
  Flag value;
  std::int64_t n = 0;
  double log_gap = std::numeric_limits<double>::infinity();
  int failed_dim = 0;  ///< first t_j without a gap, 0 when defined
};

/// Most expanding flag of A^{(n)}(x).
PartialDirection finite_direction(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n,
                                  const Signature& tau);
/// Most expanding k-plane, as a one-component flag.
PartialDirection finite_direction(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n, int k);

/// finite_direction at every scale of the increasing list, in one pass.
std::vector<PartialDirection> finite_directions(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                                const std::vector<std::int64_t>& n_list, const Signature& tau);

/// v^{(n)}_tau(A*)(x): most expanding flag of (A*)^{(n)}(x) = A^{(n)}(T^{-n}x)^T,
/// read from the left singular vectors of A^{(n)}(T^{-n}x).
PartialDirection adjoint_direction(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n,
                                   const Signature& tau);

/// Most expanding flag from precomputed exterior products wedge_k g, k = 1..kmax
/// (kmax >= max(tau) + 1). `left` selects the flag of g^T.
PartialDirection direction_from_powers(const std::vector<ScaledMatrix>& powers, int m, const Signature& tau,
                                       std::int64_t n, bool left);

/// The smallest r = 2^l with (log 2)/l + 2^{1-l} < eps.
std::int64_t doubling_ratio(double eps);

/// m_0 = n0 < m_1 < ... < m_k = n with m_i = floor(n0 2^{(1+theta) i}),
/// theta = log2(n/n0)/k - 1, k = floor(log2(n/n0)). Throws InfeasibleRange when
/// n < 2 n0 or the eps-doubling inequality fails.
std::vector<std::int64_t> doubling_sequence(std::int64_t n0, std::int64_t n, double eps);

struct AvalancheSchedule {
  std::int64_t n0 = 0;
  double eps = 0.0;
  double kappa = 0.0;
  std::vector<std::int64_t> times;
  std::vector<double> log_gaps;         ///< log gr(A^{(m_i)}(x)), every i
  std::vector<double> log_bridge_gaps;  ///< log gr(A^{(m_{i+1}-m_i)}(T^{m_i}x)), i < k
  std::vector<double> log_rifts;        ///< log rho of consecutive blocks, i < k
};

/// Adjusts the intermediate times of the doubling sequence within
/// |m_i' - m_i| < eps m_i / 6 (nearest first) until every gap, bridge gap and
/// rift condition holds. Throws NoSchedule naming the violated condition.
AvalancheSchedule avalanche_times(const Cocycle& a, const BaseSystem& s, const Phase& x, double eps,
                                  double kappa, std::int64_t n0, std::int64_t n);

struct ApReport {
  std::size_t length = 0;
  double kappa_ap = 0.0;
  double eps_ap = 0.0;
  std::vector<double> gaps;   ///< gr(g_i)
  std::vector<double> rifts;  ///< rho(g_{i-1}, g_i), i >= 1
  double distance_adjoint = 0.0;  ///< d(v(g^{(n)T}), v(g_{n-1}^T))
  double distance_forward = 0.0;  ///< d(v(g^{(n)}), v(g_0))
  double bound = 0.0;             ///< kApBound * kappa_ap / eps_ap
  double measured_constant = 0.0; ///< max distance / (kappa_ap / eps_ap)
  bool holds = false;
};

/// Verifies the Avalanche Principle hypotheses on g_0, ..., g_{n-1} and
/// measures both conclusion distances. Throws HypothesisFailure.
ApReport ap_check(const std::vector<Matrix>& chain, double kappa_ap, double eps_ap);

struct PartialFlag {
  bool defined = false;
  Flag value;  ///< signature tau^perp
};

/// F_j^{(n)}(x) = v^{(n)}_{t_{j-1}}(A)(x)^perp, stored increasingly.
PartialFlag oseledets_filtration(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n,
                                 const Signature& tau);

struct PartialDecomposition {
  bool defined = false;
  Decomposition value;
  double theta = 0.0;  ///< transversality of the two flags
};

/// E_j^{(n)}(x) = v^{(n)}_tau(A*)(x) meet v^{(n)}_tau(A)(x)^perp. Throws
/// NonTransversal when the flags are nearly degenerate.
PartialDecomposition oseledets_decomposition(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                             std::int64_t n, const Signature& tau,
                                             double theta_min = kTransversalityMin);

enum class InvariantObject { filtration, decomposition };

struct InvarianceReport {
  bool defined = false;
  std::vector<double> residuals;  ///< d(A(x) C_j(x), C_j(Tx))
  std::vector<bool> collapsed;    ///< A(x) dropped the rank of C_j(x)
};

InvarianceReport invariance_residual(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n,
                                     const Signature& tau, InvariantObject object);

struct GrowthReport {
  std::vector<std::int64_t> scales;
  std::vector<double> rates;  ///< (1/n) log ||A^{(n)}(x) v||
  double slope = 0.0;         ///< least-squares slope of log ||A^{(n)} v|| in n
  double last = 0.0;
  double upper = 0.0;  ///< max of rates over the second half of the scales
  double lower = 0.0;  ///< min of rates over the second half of the scales
  bool annihilated = false;
};

GrowthReport growth_rate_along(const Cocycle& a, const BaseSystem& s, const Phase& x, const Vector& v,
                               const std::vector<std::int64_t>& n_list);

/// Distances at or below this switch from direct differencing of the two
/// computed subspaces to the first-order expansion in the singular value
/// ratios of A^{(n)}(x).
inline constexpr double kRefineBelow = 1e-6;

/// log d(v^{(n)}_{t_j}(A)(x), v^{(N)}_{t_j}(A)(x)) for every n in n_list
/// (each < N) and every component j, indexed [j][i]. Small distances are
/// evaluated in the log domain from the factorization
/// A^{(N)}(x) = A^{(N-n)}(T^n x) U S V^T, so they keep their relative accuracy
/// far below round-off. NaN where the direction at n is undefined or the
/// distance is lost in round-off; -inf for an exact zero.
std::vector<std::vector<double>> log_scale_distances(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                                     const Signature& tau, const std::vector<std::int64_t>& n_list,
                                                     std::int64_t n_max);

struct ConvergenceReport {
  bool defined = false;                           ///< reference direction defined
  std::vector<std::int64_t> scales;               ///< all n < n_max
  std::vector<std::vector<double>> log_distances; ///< [component][scale]
  std::vector<std::vector<double>> distances;     ///< exp of log_distances (may underflow to 0)
  std::vector<double> slopes;                     ///< per component; -inf when no distance is resolvable
  std::vector<std::size_t> points_used;
};

/// Least-squares slope of log d(v^{(n)}_{t_j}, v^{(n_max)}_{t_j}) against n over
/// the scales with a finite log distance; a single usable point gives
/// (1/n) log d.
ConvergenceReport convergence_rate(const Cocycle& a, const BaseSystem& s, const Phase& x, const Signature& tau,
                                   const std::vector<std::int64_t>& n_list);

struct AlphaSeries {
  std::vector<std::int64_t> scales;
  std::vector<double> values;  ///< (1/n) log alpha, NaN where undefined
  std::vector<bool> defined;
  double last_abs = std::numeric_limits<double>::quiet_NaN();
};

/// (1/n) log alpha(v^{(n)}(A*)(T^n x), v^{(n)}(A)(T^n x)) for the most expanding
/// lines.
AlphaSeries alpha_alignment_series(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                   const std::vector<std::int64_t>& n_list);

}  // namespace oslab
