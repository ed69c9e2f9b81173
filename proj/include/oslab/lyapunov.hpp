#pragma once

// Finite-scale Lyapunov spectra, gap patterns and subadditivity diagnostics.

#include "oslab/cocycle.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace oslab {

/// Exponents whose per-step average falls below this are reported as -inf.
inline constexpr double kMinusInfinityLevel = -700.0;

struct L1Estimate {
  double value = 0.0;      ///< nats per step; -inf if any sampled product vanished
  double std_error = 0.0;  ///< over the finite samples
  std::size_t samples = 0;
  std::size_t zero_products = 0;
};

/// Mean over sampled phases of (1/n) log ||A^{(n)}(x)||.
L1Estimate estimate_L1(const Cocycle& a, const BaseSystem& s, std::int64_t n, std::size_t samples,
                       std::uint64_t seed, int threads = 1, Sampling sampling = Sampling::iid);

struct SpectrumEstimate {
  std::int64_t n = 0;
  std::vector<double> values;      ///< L_1 >= ... >= L_m, nats per step
  std::vector<double> std_errors;  ///< 0 for -inf entries
  std::size_t sample_count = 0;
  std::vector<double> wedge_values;  ///< L_1(wedge_k A) for k = 1..m
  std::vector<double> wedge_errors;
};

/// L_i = L_1(wedge_i A) - L_1(wedge_{i-1} A), each term estimated from its own
/// renormalized exterior product.
SpectrumEstimate estimate_spectrum(const Cocycle& a, const BaseSystem& s, std::int64_t n, std::size_t samples,
                                   std::uint64_t seed, int threads = 1, Sampling sampling = Sampling::iid);

/// Same estimator over explicitly supplied phases.
SpectrumEstimate spectrum_at_phases(const Cocycle& a, const BaseSystem& s, std::int64_t n,
                                    const std::vector<Phase>& phases, int threads = 1);

struct GapPattern {
  Signature tau;
  double gap = std::numeric_limits<double>::infinity();  ///< min_j L_{t_j} - L_{t_j + 1}
  bool exact = true;  ///< every block between gaps has spread <= threshold
  double threshold = 0.0;
};

/// max(0.05, 5 * largest combined standard error of consecutive exponents).
double default_gap_threshold(const SpectrumEstimate& est);

/// Collects every j with L_j - L_{j+1} > threshold. A negative threshold
/// selects default_gap_threshold(est). Differences equal to the threshold are
/// not gaps, so ties resolve to the coarser signature.
GapPattern detect_gap_pattern(const SpectrumEstimate& est, double threshold = -1.0);

struct FeketeViolation {
  std::int64_t n = 0;
  std::int64_t m = 0;
  double excess = 0.0;  ///< a_{n+m} - a_n - a_m > 0
};

struct FeketeReport {
  double inf_ratio = std::numeric_limits<double>::infinity();  ///< inf_n a_n / n
  double last_ratio = 0.0;
  double limit_gap = 0.0;  ///< last_ratio - inf_ratio
  std::size_t pairs_checked = 0;
  std::vector<FeketeViolation> violations;
  double max_excess = 0.0;
};

/// Checks a_{n+m} <= a_n + a_m on every pair whose sum is in the sequence.
FeketeReport fekete_diagnostic(const std::vector<std::pair<std::int64_t, double>>& seq);

struct LpReport {
  double p = 2.0;  ///< +inf selects the max over samples
  std::vector<std::int64_t> scales;
  std::vector<double> norms;
  bool nonuniform = false;  ///< last norm more than twice the first (plus 1e-12)
};

/// Empirical ||(1/n) log ||A^{(n)}|| ||_{L^p(mu)} for each n.
LpReport lp_bound_estimate(const Cocycle& a, const BaseSystem& s, const std::vector<std::int64_t>& n_list,
                           std::size_t samples, double p, std::uint64_t seed, int threads = 1);

/// |L_1^{(2n)} - L_1^{(n)}| on common phases, the empirical Cauchy gap.
double cauchy_gap(const Cocycle& a, const BaseSystem& s, std::int64_t n, std::size_t samples, std::uint64_t seed,
                  int threads = 1);

}  // namespace oslab
