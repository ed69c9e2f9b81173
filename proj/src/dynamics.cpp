#include "oslab/dynamics.hpp"

#include "oslab/errors.hpp"
#include "oslab/parallel.hpp"
#include "oslab/rng.hpp"

#include <cmath>
#include <random>

namespace oslab {

namespace {

constexpr double kStochasticTol = 1e-10;

Eigen::VectorXd cumulative(const Eigen::VectorXd& p) {
  Eigen::VectorXd c(p.size());
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    s += p(i);
    c(i) = s;
  }
  c(p.size() - 1) = 1.0;
  return c;
}

Eigen::MatrixXd cumulative_rows(const Eigen::MatrixXd& p) {
  Eigen::MatrixXd c(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) c.row(i) = cumulative(p.row(i).transpose()).transpose();
  return c;
}

int categorical(const Eigen::VectorXd& cdf, double u) {
  for (Eigen::Index c = 0; c < cdf.size(); ++c) {
    if (u < cdf(c)) return static_cast<int>(c);
  }
  return static_cast<int>(cdf.size() - 1);
}

double frac(double v) { return v - std::floor(v); }

}  // namespace

// ---------------------------------------------------------------------------

MarkovPath::MarkovPath(std::uint64_t seed, std::shared_ptr<const Eigen::MatrixXd> forward_cdf,
                       std::shared_ptr<const Eigen::MatrixXd> backward_cdf,
                       std::shared_ptr<const Eigen::VectorXd> stationary_cdf, std::size_t capacity)
    : seed_(seed),
      forward_cdf_(std::move(forward_cdf)),
      backward_cdf_(std::move(backward_cdf)),
      stationary_cdf_(std::move(stationary_cdf)),
      capacity_(std::max<std::size_t>(capacity, 1)) {}

int MarkovPath::draw(const Eigen::VectorXd& cdf, std::int64_t index) const {
  return categorical(cdf, to_unit(mix(seed_, static_cast<std::uint64_t>(index))));
}

int MarkovPath::forward_from(int s, std::int64_t index) const {
  return draw(forward_cdf_->row(s).transpose(), index);
}

int MarkovPath::backward_from(int s, std::int64_t index) const {
  return draw(backward_cdf_->row(s).transpose(), index);
}

void MarkovPath::reset_at_zero() {
  window_.clear();
  window_.push_back(draw(*stationary_cdf_, 0));
  lo_ = 0;
}

int MarkovPath::state(std::int64_t j) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (window_.empty()) reset_at_zero();
  while (true) {
    const auto hi = lo_ + static_cast<std::int64_t>(window_.size());
    if (j >= lo_ && j < hi) return window_[static_cast<std::size_t>(j - lo_)];
    if (j >= hi) {
      // The forward chain is generated from index 0 outwards, so a window
      // lying entirely at negative indices cannot be extended forward.
      if (hi - 1 < 0) {
        reset_at_zero();
        continue;
      }
      window_.push_back(forward_from(window_.back(), hi));
      if (window_.size() > capacity_) {
        window_.pop_front();
        ++lo_;
      }
    } else {
      if (lo_ > 0) {
        reset_at_zero();
        continue;
      }
      window_.push_front(backward_from(window_.front(), lo_ - 1));
      --lo_;
      if (window_.size() > capacity_) window_.pop_back();
    }
  }
}

// ---------------------------------------------------------------------------

BaseSystem BaseSystem::rotation(std::vector<double> alpha) {
  if (alpha.empty()) throw InvalidArgument("rotation: need at least one frequency");
  for (double& a : alpha) {
    if (!std::isfinite(a)) throw NonFinite("rotation: non-finite frequency");
    a = frac(a);
  }
  BaseSystem s;
  s.kind_ = BaseKind::rotation;
  s.alpha_lo_.assign(alpha.size(), 0.0);
  s.alpha_ = std::move(alpha);
  return s;
}

BaseSystem BaseSystem::golden_rotation() {
  const long double golden = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  BaseSystem s;
  s.kind_ = BaseKind::rotation;
  s.alpha_ = {static_cast<double>(golden)};
  s.alpha_lo_ = {static_cast<double>(golden - static_cast<long double>(s.alpha_[0]))};
  return s;
}

BaseSystem BaseSystem::bernoulli(std::vector<double> weights) {
  if (weights.size() < 1) throw InvalidArgument("bernoulli: empty alphabet");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("bernoulli: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kStochasticTol) throw InvalidArgument("bernoulli: weights must sum to 1");
  BaseSystem s;
  s.kind_ = BaseKind::bernoulli;
  s.weights_ = weights;
  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  s.stationary_ = std::make_shared<const Eigen::VectorXd>(p);
  s.stationary_cdf_ = std::make_shared<const Eigen::VectorXd>(cumulative(p));
  return s;
}

Eigen::VectorXd stationary_vector(const Eigen::MatrixXd& transition) {
  const auto k = transition.rows();
  // Solve pi (P - I) = 0 with sum(pi) = 1 as a least-squares system.
  Eigen::MatrixXd a(k + 1, k);
  a.topRows(k) = (transition - Eigen::MatrixXd::Identity(k, k)).transpose();
  a.row(k).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k + 1);
  b(k) = 1.0;
  return a.colPivHouseholderQr().solve(b);
}

BaseSystem BaseSystem::markov(const Eigen::MatrixXd& transition, std::size_t window_capacity) {
  const auto k = transition.rows();
  if (k < 1 || transition.cols() != k) throw InvalidArgument("markov: transition matrix must be square");
  if (!transition.allFinite()) throw NonFinite("markov: non-finite transition matrix");
  if ((transition.array() < 0.0).any()) throw InvalidArgument("markov: negative transition probability");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(transition.row(i).sum() - 1.0) > kStochasticTol) {
      throw InvalidArgument("markov: row " + std::to_string(i) + " does not sum to 1");
    }
  }
  const Eigen::VectorXd pi = stationary_vector(transition);
  if ((pi.array() <= 1e-12).any() || ((pi.transpose() * transition - pi.transpose()).cwiseAbs().maxCoeff() > 1e-9)) {
    throw InvalidArgument("markov: chain has no strictly positive stationary vector");
  }
  Eigen::MatrixXd reversed(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) reversed(i, j) = pi(j) * transition(j, i) / pi(i);
  }
  BaseSystem s;
  s.kind_ = BaseKind::markov;
  s.transition_ = std::make_shared<const Eigen::MatrixXd>(transition);
  s.stationary_ = std::make_shared<const Eigen::VectorXd>(pi);
  s.weights_.assign(pi.data(), pi.data() + pi.size());
  s.forward_cdf_ = std::make_shared<const Eigen::MatrixXd>(cumulative_rows(transition));
  s.backward_cdf_ = std::make_shared<const Eigen::MatrixXd>(cumulative_rows(reversed));
  s.stationary_cdf_ = std::make_shared<const Eigen::VectorXd>(cumulative(pi));
  s.window_capacity_ = window_capacity;
  return s;
}

std::string BaseSystem::kind_name() const {
  switch (kind_) {
    case BaseKind::rotation: return "rotation";
    case BaseKind::bernoulli: return "bernoulli";
    case BaseKind::markov: return "markov";
  }
  return "unknown";
}

BaseSystem BaseSystem::inverse() const {
  BaseSystem s = *this;
  s.reversed_ = !reversed_;
  return s;
}

int BaseSystem::torus_dim() const {
  return kind_ == BaseKind::rotation ? static_cast<int>(alpha_.size()) : 0;
}

const std::vector<double>& BaseSystem::alpha() const {
  if (kind_ != BaseKind::rotation) throw InvalidArgument("alpha: not a rotation");
  return alpha_;
}

int BaseSystem::alphabet_size() const {
  return kind_ == BaseKind::rotation ? 0 : static_cast<int>(weights_.size());
}

const std::vector<double>& BaseSystem::weights() const {
  if (kind_ == BaseKind::rotation) throw InvalidArgument("weights: not a shift");
  return weights_;
}

const Eigen::MatrixXd& BaseSystem::transition() const {
  if (kind_ != BaseKind::markov) throw InvalidArgument("transition: not a Markov shift");
  return *transition_;
}

const Eigen::VectorXd& BaseSystem::stationary() const {
  if (kind_ == BaseKind::rotation) throw InvalidArgument("stationary: not a shift");
  return *stationary_;
}

void BaseSystem::validate_phase(const Phase& x) const {
  const bool ok = (kind_ == BaseKind::rotation && std::holds_alternative<TorusPoint>(x) &&
                   std::get<TorusPoint>(x).origin.size() == alpha_.size()) ||
                  (kind_ == BaseKind::bernoulli && std::holds_alternative<SymbolicPoint>(x)) ||
                  (kind_ == BaseKind::markov && std::holds_alternative<ChainPoint>(x) &&
                   std::get<ChainPoint>(x).path != nullptr);
  if (!ok) throw InvalidArgument("phase does not belong to a " + kind_name() + " base system");
}

Phase BaseSystem::step(const Phase& x, std::int64_t n) const {
  validate_phase(x);
  const std::int64_t d = reversed_ ? -n : n;
  return std::visit(
      [d](const auto& p) -> Phase {
        auto q = p;
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TorusPoint>) {
          q.offset += d;
        } else {
          q.position += d;
        }
        return q;
      },
      x);
}

std::vector<double> BaseSystem::coordinates(const Phase& x) const {
  if (kind_ != BaseKind::rotation) throw InvalidArgument("coordinates: not a rotation");
  validate_phase(x);
  const auto& t = std::get<TorusPoint>(x);
  const double k = static_cast<double>(t.offset);
  std::vector<double> out(alpha_.size());
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    // k * alpha = p + e exactly (two-product), plus the low-order part of alpha.
    const double p = k * alpha_[i];
    const double e = std::fma(k, alpha_[i], -p);
    double s = t.origin[i] + frac(p);
    s += e + k * alpha_lo_[i];
    s = frac(s);
    out[i] = s >= 1.0 ? 0.0 : s;
  }
  return out;
}

double BaseSystem::coordinate(const Phase& x) const { return coordinates(x)[0]; }

int BaseSystem::symbol(const Phase& x, std::int64_t j) const {
  validate_phase(x);
  if (kind_ == BaseKind::bernoulli) {
    const auto& p = std::get<SymbolicPoint>(x);
    return categorical(*stationary_cdf_, to_unit(mix(p.seed, static_cast<std::uint64_t>(p.position + j))));
  }
  if (kind_ == BaseKind::markov) {
    const auto& p = std::get<ChainPoint>(x);
    return p.path->state(p.position + j);
  }
  throw InvalidArgument("symbol: not a shift");
}

std::vector<Phase> BaseSystem::sample_phases(std::size_t count, std::uint64_t seed, Sampling sampling) const {
  if (count < 1) throw InvalidArgument("sample_phases: count must be at least 1");
  if (sampling == Sampling::grid && !(kind_ == BaseKind::rotation && alpha_.size() == 1)) {
    throw InvalidArgument("sample_phases: grid sampling needs a one-dimensional rotation");
  }
  std::vector<Phase> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = mix(seed, i);
    switch (kind_) {
      case BaseKind::rotation: {
        TorusPoint p;
        if (sampling == Sampling::grid) {
          p.origin = {(static_cast<double>(i) + 0.5) / static_cast<double>(count)};
        } else {
          std::mt19937_64 gen(s);
          p.origin.resize(alpha_.size());
          for (double& c : p.origin) c = to_unit(gen());
        }
        out.emplace_back(std::move(p));
        break;
      }
      case BaseKind::bernoulli:
        out.emplace_back(SymbolicPoint{s, 0});
        break;
      case BaseKind::markov:
        out.emplace_back(ChainPoint{
            std::make_shared<MarkovPath>(s, forward_cdf_, backward_cdf_, stationary_cdf_, window_capacity_), 0});
        break;
    }
  }
  return out;
}

double BaseSystem::birkhoff_average(const std::function<double(const Phase&)>& xi, const Phase& x,
                                    std::int64_t n) const {
  if (n < 1) throw InvalidArgument("birkhoff_average: n must be at least 1");
  std::vector<double> values(static_cast<std::size_t>(n));
  Phase y = x;
  for (std::int64_t j = 0; j < n; ++j) {
    values[static_cast<std::size_t>(j)] = xi(y);
    y = step(y, 1);
  }
  return pairwise_sum(values.data(), values.size()) / static_cast<double>(n);
}

}  // namespace oslab
