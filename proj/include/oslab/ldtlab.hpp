#pragma once

// Empirical large-deviation measures, exceptional-set bookkeeping and
// perturbation-continuity experiments.

#include "oslab/cocycle.hpp"
#include "oslab/grassmann.hpp"
#include "oslab/parallel.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace oslab {

/// Empirical measure of an event with its 95% Wilson interval.
struct Frequency {
  std::size_t hits = 0;
  std::size_t total = 0;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

Frequency make_frequency(std::size_t hits, std::size_t total);

struct FiberDeviation {
  std::int64_t n = 0;
  double eps = 0.0;
  double reference = 0.0;  ///< L_1^{(n)}, nats per step
  Frequency measure;
};

/// mu{ x : |(1/n) log ||A^{(n)}(x)|| - L_1^{(n)}(A)| > eps }. The reference
/// L_1^{(n)} is estimated on an independent sample of the same size unless
/// supplied.
FiberDeviation fiber_deviation_measure(const Cocycle& a, const BaseSystem& s, std::int64_t n, double eps,
                                       std::size_t samples, std::uint64_t seed, int threads = 1,
                                       std::optional<double> reference = std::nullopt);

/// mu{ x : |(1/n) S_n xi(x) - mean| > eps }. The mean of xi is estimated from
/// Birkhoff averages on an independent sample unless supplied.
FiberDeviation base_deviation_measure(const BaseSystem& s, const std::function<double(const Phase&)>& xi,
                                      std::int64_t n, double eps, std::size_t samples, std::uint64_t seed,
                                      int threads = 1, std::optional<double> mean = std::nullopt);

/// measures[i][j] for scales[i] and epsilons[j]; one sample and one reference
/// per scale, so each row is nonincreasing in eps.
struct DeviationProfile {
  std::vector<std::int64_t> scales;
  std::vector<double> epsilons;
  std::vector<double> references;
  std::vector<std::vector<Frequency>> measures;
};

DeviationProfile deviation_profile(const Cocycle& a, const BaseSystem& s, const std::vector<std::int64_t>& scales,
                                   const std::vector<double>& epsilons, std::size_t samples, std::uint64_t seed,
                                   int threads = 1);

/// Membership frequencies of the exceptional sets at scale n, with
/// eps_n = kappa / 100 unless given:
///   ldt  |(1/n) log ||B^{(n)}(x)|| - L_1^{(n)}| > eps_n
///   g    gr(B^{(n)}(x)) <= e^{n kappa / 2}
///   a    x or T^n x in ldt_m for some n <= m <= 3n
///   ga   g or a
///   ap   T^{i n} x in ga for some 0 <= i < K, K = max(1, floor(1 / (n mes_n^{1/2})))
///   flat ap at scale n or at scale 2n
/// with mes_n = max(freq(ldt), freq(g), 1/samples) and K capped at `max_shifts`.
struct ExceptionalSets {
  std::int64_t n = 0;
  double kappa = 0.0;
  double eps_n = 0.0;
  double mes_n = 0.0;
  std::int64_t shifts = 0;  ///< K used for ap at scale n
  Frequency ldt;
  Frequency g;
  Frequency a;
  Frequency ga;
  Frequency ap;
  Frequency flat;
  bool union_bound_holds = false;  ///< freq(ga) <= freq(g) + freq(a)
  bool nested = false;             ///< ga within ap within flat, pointwise
};

ExceptionalSets exceptional_set_frequency(const Cocycle& b, const BaseSystem& s, std::int64_t n, double kappa,
                                          std::size_t samples, std::uint64_t seed, int threads = 1,
                                          double eps_n = -1.0, std::int64_t max_shifts = 16);

struct SpeedReport {
  std::int64_t n = 0;
  std::int64_t n_max = 0;
  double kappa = 0.0;
  double log_bound = 0.0;  ///< -3 n kappa / 10
  Frequency violations;    ///< undefined directions count as violations
  std::size_t undefined = 0;
  std::vector<double> log_distances;  ///< per sample, NaN when undefined
};

/// Fraction of phases with d(v(B^{(n)}(x)), v^{(n_max)}(B)(x)) >= e^{-3 n kappa / 10};
/// v^{(n_max)} stands in for the limit direction. n_max <= 0 selects n^2.
SpeedReport speed_of_convergence_check(const Cocycle& b, const BaseSystem& s, std::int64_t n, double kappa,
                                       std::size_t samples, std::uint64_t seed, int threads = 1,
                                       std::int64_t n_max = 0);

enum class ContinuityTarget { direction, filtration, decomposition };

ContinuityTarget parse_continuity_target(const std::string& name);
std::string to_string(ContinuityTarget target);

using CocycleFamily = std::function<Cocycle(double h)>;

struct ContinuityRecord {
  double h = 0.0;                  ///< family parameter
  double cocycle_distance = 0.0;   ///< max over the phases of ||B_h(x) - A(x)||
  double mean = 0.0;               ///< mean pointwise dist_tau over defined phases
  double q50 = 0.0;
  double q90 = 0.0;
  std::vector<double> distances;   ///< sorted; the empirical CDF
  double alpha_trial = 1.0;
  double exceed_fraction = 0.0;    ///< fraction of defined phases with distance > h^alpha_trial
  std::size_t defined = 0;
  std::size_t undefined = 0;
};

struct ContinuityOptions {
  std::int64_t n = 512;
  std::size_t samples = 200;
  std::uint64_t seed = 0;
  int threads = 1;
  ContinuityTarget target = ContinuityTarget::direction;
  Signature tau;
  /// Signature used for the perturbed cocycles; must refine tau. Defaults to tau.
  std::optional<Signature> tau_b;
  double alpha_trial = 1.0;
};

/// For each h: pointwise distances between the tau-restricted targets of
/// family(h) and of `a` at scale n on common phases.
std::vector<ContinuityRecord> continuity_experiment(const Cocycle& a, const CocycleFamily& family,
                                                    const std::vector<double>& h_list, const BaseSystem& s,
                                                    const ContinuityOptions& options);

struct ModulusFit {
  bool defined = false;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> residuals;
  std::size_t points = 0;
  std::string reason;  ///< why the fit is undefined
};

/// Least-squares slope of log(mean distance) against log h. Records with
/// zero mean are skipped; fewer than three distinct h leaves alpha undefined.
ModulusFit modulus_fit(const std::vector<ContinuityRecord>& records);

}  // namespace oslab
