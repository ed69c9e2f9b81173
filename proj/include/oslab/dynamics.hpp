#pragma once

// Invertible ergodic base systems: torus rotations, Bernoulli shifts and
// stationary Markov shifts.

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace oslab {

/// Point of T^d stored as an origin plus an integer number of steps, so the
/// group law is exact and every orbit point is evaluated from the origin.
struct TorusPoint {
  std::vector<double> origin;
  std::int64_t offset = 0;
};

/// Position in a bi-infinite i.i.d. sequence. Symbol j of the sequence is a
/// hash of (seed, j), so the sequence is reproducible from the seed alone.
struct SymbolicPoint {
  std::uint64_t seed = 0;
  std::int64_t position = 0;
};

class MarkovPath;

/// Position in a seeded stationary Markov path shared between orbit points.
struct ChainPoint {
  std::shared_ptr<MarkovPath> path;
  std::int64_t position = 0;
};

using Phase = std::variant<TorusPoint, SymbolicPoint, ChainPoint>;

enum class BaseKind { rotation, bernoulli, markov };

enum class Sampling {
  iid,   ///< independent draws from the invariant measure
  grid,  ///< equally spaced midpoints; 1-D rotations only
};

/// Lazily generated two-sided stationary path of a Markov chain. States at
/// positive indices follow P, states at negative indices follow the reversed
/// chain, and index 0 is a stationary draw. The cached window slides and is
/// regenerated from index 0 when an evicted state is requested again.
class MarkovPath {
 public:
  MarkovPath(std::uint64_t seed, std::shared_ptr<const Eigen::MatrixXd> forward_cdf,
             std::shared_ptr<const Eigen::MatrixXd> backward_cdf,
             std::shared_ptr<const Eigen::VectorXd> stationary_cdf, std::size_t capacity);

  int state(std::int64_t j);
  std::uint64_t seed() const { return seed_; }

 private:
  int draw(const Eigen::VectorXd& cdf, std::int64_t index) const;
  int forward_from(int s, std::int64_t index) const;
  int backward_from(int s, std::int64_t index) const;
  void reset_at_zero();

  std::uint64_t seed_;
  std::shared_ptr<const Eigen::MatrixXd> forward_cdf_;
  std::shared_ptr<const Eigen::MatrixXd> backward_cdf_;
  std::shared_ptr<const Eigen::VectorXd> stationary_cdf_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::deque<int> window_;  // window_[i] is the state at index lo_ + i
  std::int64_t lo_ = 0;
};

/// Immutable description of (X, mu, T). Copies share their read-only data.
class BaseSystem {
 public:
  /// Rotation x -> x + alpha (mod 1) on T^d with d = alpha.size().
  static BaseSystem rotation(std::vector<double> alpha);
  /// One-dimensional rotation by the golden mean (sqrt 5 - 1)/2, with the
  /// rotation number carried in extended precision.
  static BaseSystem golden_rotation();
  /// Two-sided Bernoulli shift on {0, ..., k-1} with the given weights.
  static BaseSystem bernoulli(std::vector<double> weights);
  /// Two-sided stationary Markov shift. `window_capacity` bounds the states
  /// cached per path.
  static BaseSystem markov(const Eigen::MatrixXd& transition, std::size_t window_capacity = 1u << 20);

  BaseKind kind() const { return kind_; }
  std::string kind_name() const;
  /// True for the inverse system T^{-1}.
  bool reversed() const { return reversed_; }
  BaseSystem inverse() const;

  int torus_dim() const;
  const std::vector<double>& alpha() const;
  int alphabet_size() const;
  const std::vector<double>& weights() const;
  const Eigen::MatrixXd& transition() const;
  /// Stationary vector of the Markov chain (equal to weights() for Bernoulli).
  const Eigen::VectorXd& stationary() const;
  std::size_t window_capacity() const { return window_capacity_; }

  /// T^n x for any integer n. Exact group law for every kind.
  Phase step(const Phase& x, std::int64_t n) const;
  /// Torus coordinates in [0, 1)^d, evaluated with compensated arithmetic.
  std::vector<double> coordinates(const Phase& x) const;
  /// First coordinate; convenience for 1-D rotations.
  double coordinate(const Phase& x) const;
  /// Symbol x_j of a shift phase (j relative to the current position).
  int symbol(const Phase& x, std::int64_t j = 0) const;

  /// Draws from mu, deterministic for a fixed seed.
  std::vector<Phase> sample_phases(std::size_t count, std::uint64_t seed,
                                   Sampling sampling = Sampling::iid) const;

  /// (1/n) sum_{j<n} xi(T^j x).
  double birkhoff_average(const std::function<double(const Phase&)>& xi, const Phase& x,
                          std::int64_t n) const;

 private:
  BaseSystem() = default;
  void validate_phase(const Phase& x) const;

  BaseKind kind_ = BaseKind::rotation;
  bool reversed_ = false;
  std::vector<double> alpha_;
  std::vector<double> alpha_lo_;  // low-order parts of alpha
  std::vector<double> weights_;
  std::shared_ptr<const Eigen::MatrixXd> transition_;
  std::shared_ptr<const Eigen::VectorXd> stationary_;
  std::shared_ptr<const Eigen::MatrixXd> forward_cdf_;
  std::shared_ptr<const Eigen::MatrixXd> backward_cdf_;
  std::shared_ptr<const Eigen::VectorXd> stationary_cdf_;
  std::size_t window_capacity_ = 0;
};

/// Stationary vector of a row-stochastic matrix (left Perron eigenvector).
Eigen::VectorXd stationary_vector(const Eigen::MatrixXd& transition);

}  // namespace oslab
