#include "oslab/oseledets.hpp"

#include "oslab/errors.hpp"
#include "oslab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace oslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int required_kmax(int m, const Signature& tau) {
  if (tau.ambient_dim() != m) throw DimensionMismatch("signature ambient dimension differs from the cocycle");
  return tau.empty() ? 0 : std::min(m, tau.dims().back() + 1);
}

void check_scales(const std::vector<std::int64_t>& n_list, const char* what) {
  if (n_list.empty()) throw InvalidArgument(std::string(what) + ": empty scale list");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1 || (i > 0 && n_list[i] <= n_list[i - 1])) {
      throw InvalidArgument(std::string(what) + ": scales must be positive and strictly increasing");
    }
  }
}

// Extends the orthonormal frame `prev` to span the plane `next` (which
// contains it up to round-off), so consecutive flag components nest exactly.
Matrix extend_frame(const Matrix& prev, const Matrix& next) {
  const auto add = next.cols() - prev.cols();
  if (prev.cols() == 0) return next;
  const Matrix residual = next - prev * (prev.transpose() * next);
  Eigen::JacobiSVD<Matrix> solver(residual, Eigen::ComputeThinU);
  Matrix out(next.rows(), next.cols());
  out << prev, solver.matrixU().leftCols(add);
  Eigen::HouseholderQR<Matrix> qr(out);
  Matrix q = qr.householderQ() * Matrix::Identity(out.rows(), out.cols());
  // Keep the orientation of the input columns.
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (q.col(j).dot(out.col(j)) < 0) q.col(j) *= -1.0;
  }
  return q;
}

double log_gap_at(const std::vector<ScaledMatrix>& powers, int t) {
  auto l = [&](int k) { return k == 0 ? 0.0 : powers[static_cast<std::size_t>(k - 1)].log_norm(); };
  const double lk = l(t);
  if (lk == -kInf) return 0.0;  // s_t = s_{t+1} = 0
  const double lnext = l(t + 1);
  if (lnext == -kInf) return kInf;
  return 2.0 * lk - l(t - 1) - lnext;
}

}  // namespace

PartialDirection direction_from_powers(const std::vector<ScaledMatrix>& powers, int m, const Signature& tau,
                                       std::int64_t n, bool left) {
  PartialDirection out;
  out.n = n;
  const int kmax = required_kmax(m, tau);
  if (tau.empty()) {
    out.defined = true;
    out.value = Flag(tau, {});
    return out;
  }
  if (static_cast<int>(powers.size()) < kmax) {
    throw InvalidArgument("direction_from_powers: not enough exterior powers for the signature");
  }
  const double threshold = std::log1p(kGapTolerance);
  for (int t : tau.dims()) {
    const double lg = log_gap_at(powers, t);
    out.log_gap = std::min(out.log_gap, lg);
    if (!(lg > threshold)) {
      out.failed_dim = t;
      return out;
    }
  }
  std::vector<Subspace> parts;
  Matrix frame(m, 0);
  for (int t : tau.dims()) {
    const SingularData sd = svd(powers[static_cast<std::size_t>(t - 1)].factor());
    const Vector w = left ? Vector(sd.left.col(0)) : Vector(sd.right.col(0));
    const Subspace plane = subspace_from_multivector(w, m, t);
    frame = extend_frame(frame, plane.basis());
    parts.emplace_back(frame);
  }
  out.defined = true;
  out.value = Flag(tau, std::move(parts));
  return out;
}

PartialDirection finite_direction(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n,
                                  const Signature& tau) {
  return finite_directions(a, s, x, {n}, tau).front();
}

PartialDirection finite_direction(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n, int k) {
  return finite_direction(a, s, x, n, Signature(a.dim(), {k}));
}

std::vector<PartialDirection> finite_directions(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                                const std::vector<std::int64_t>& n_list, const Signature& tau) {
  check_scales(n_list, "finite_direction");
  const int kmax = required_kmax(a.dim(), tau);
  std::vector<PartialDirection> out;
  out.reserve(n_list.size());
  if (kmax == 0) {
    for (auto n : n_list) out.push_back(direction_from_powers({}, a.dim(), tau, n, false));
    return out;
  }
  const ExteriorIterates ex = exterior_iterates(a, s, x, n_list, kmax);
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    out.push_back(direction_from_powers(ex.powers[i], a.dim(), tau, n_list[i], false));
  }
  return out;
}

PartialDirection adjoint_direction(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n,
                                   const Signature& tau) {
  if (n < 1) throw InvalidArgument("adjoint_direction: n must be at least 1");
  const int kmax = required_kmax(a.dim(), tau);
  if (kmax == 0) return direction_from_powers({}, a.dim(), tau, n, true);
  const ExteriorIterates ex = exterior_iterates(a, s, s.step(x, -n), {n}, kmax);
  return direction_from_powers(ex.powers[0], a.dim(), tau, n, true);
}

// ---------------------------------------------------------------------------

std::int64_t doubling_ratio(double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("doubling_ratio: eps must be positive");
  for (int l = 1; l < 62; ++l) {
    if (std::log(2.0) / l + std::ldexp(1.0, 1 - l) < eps) return std::int64_t{1} << l;
  }
  throw InfeasibleRange("doubling_ratio: eps too small for a 64-bit ratio");
}

std::vector<std::int64_t> doubling_sequence(std::int64_t n0, std::int64_t n, double eps) {
  if (n0 < 1) throw InvalidArgument("doubling_sequence: n0 must be at least 1");
  if (!(eps > 0.0)) throw InvalidArgument("doubling_sequence: eps must be positive");
  auto infeasible = [&](const std::string& why) {
    std::ostringstream msg;
    msg << "doubling_sequence: " << why << " (n0=" << n0 << ", n=" << n << ", eps=" << eps
        << "; n >= r*n0 with r=" << doubling_ratio(eps) << " always suffices)";
    return InfeasibleRange(msg.str());
  };
  if (n < 2 * n0) throw infeasible("n must be at least 2*n0");
  int k = 0;
  while (n0 * (std::int64_t{2} << k) <= n) ++k;  // largest k >= 1 with n0 2^k <= n
  k = std::max(k, 1);
  const double ratio = static_cast<double>(n) / static_cast<double>(n0);
  const double theta = std::log2(ratio) / k - 1.0;
  std::vector<std::int64_t> m(static_cast<std::size_t>(k + 1));
  m[0] = n0;
  for (int i = 1; i < k; ++i) {
    m[static_cast<std::size_t>(i)] =
        static_cast<std::int64_t>(std::floor(static_cast<double>(n0) * std::exp2((1.0 + theta) * i)));
  }
  m[static_cast<std::size_t>(k)] = n;
  for (int i = 1; i <= k; ++i) {
    const auto cur = static_cast<double>(m[static_cast<std::size_t>(i)]);
    const auto prev = static_cast<double>(m[static_cast<std::size_t>(i - 1)]);
    if (!(std::abs(cur - 2.0 * prev) < eps * cur)) {
      throw infeasible("eps-doubling inequality fails at i=" + std::to_string(i));
    }
  }
  return m;
}

namespace {

struct LogNorms {
  double l1 = 0.0;
  double l2 = 0.0;
  double log_gap() const {
    if (l1 == -kInf) return 0.0;
    if (l2 == -kInf) return kInf;
    return 2.0 * l1 - l2;
  }
};

class ScheduleSearch {
 public:
  ScheduleSearch(const Cocycle& a, const BaseSystem& s, const Phase& x, double eps, double kappa,
                 std::vector<std::vector<std::int64_t>> windows)
      : a_(a), s_(s), x_(x), eps_(eps), kappa_(kappa), windows_(std::move(windows)) {
    std::set<std::int64_t> all;
    for (const auto& w : windows_) all.insert(w.begin(), w.end());
    const std::vector<std::int64_t> scales(all.begin(), all.end());
    const ExteriorIterates ex = exterior_iterates(a_, s_, x_, scales, 2);
    for (std::size_t i = 0; i < scales.size(); ++i) prefix_[scales[i]] = {ex.log_norm(i, 1), ex.log_norm(i, 2)};
  }

  bool run(std::vector<std::int64_t>& times) {
    const std::int64_t m0 = windows_.front().front();
    if (!gap_ok(m0)) {
      record(0, "gap at m_0=" + std::to_string(m0));
      return false;
    }
    times.assign(1, m0);
    return extend(0, times);
  }

  double gap(std::int64_t m) const { return prefix_.at(m).log_gap(); }
  LogNorms bridge(std::int64_t start, std::int64_t len) {
    const auto key = std::make_pair(start, len);
    auto it = bridges_.find(key);
    if (it != bridges_.end()) return it->second;
    const ExteriorIterates ex = exterior_iterates(a_, s_, s_.step(x_, start), {len}, 2);
    const LogNorms v{ex.log_norm(0, 1), ex.log_norm(0, 2)};
    bridges_.emplace(key, v);
    return v;
  }
  double log_rift(std::int64_t mi, std::int64_t mnext) {
    return prefix_.at(mnext).l1 - prefix_.at(mi).l1 - bridge(mi, mnext - mi).l1;
  }
  const std::string& violation() const { return violation_; }

 private:
  bool gap_ok(std::int64_t m) const { return gap(m) >= static_cast<double>(m) * (kappa_ - 2.0 * eps_); }

  void record(std::size_t depth, const std::string& what) {
    if (violation_.empty() || depth >= violation_depth_) {
      violation_depth_ = depth;
      violation_ = what;
    }
  }

  bool extend(std::size_t i, std::vector<std::int64_t>& times) {
    if (i + 1 == windows_.size()) return true;
    const std::int64_t mi = times.back();
    const double dm = static_cast<double>(mi);
    for (std::int64_t c : windows_[i + 1]) {
      if (failed_.count({i + 1, c}) != 0 || c <= mi) continue;
      const std::string at = " between m_" + std::to_string(i) + "=" + std::to_string(mi) + " and m_" +
                             std::to_string(i + 1) + "=" + std::to_string(c);
      const double dc = static_cast<double>(c);
      if (!(std::abs(dc - 2.0 * dm) < eps_ * dc)) {
        record(i + 1, "eps-doubling" + at);
        continue;
      }
      if (!gap_ok(c)) {
        record(i + 1, "gap at m_" + std::to_string(i + 1) + "=" + std::to_string(c));
        failed_.insert({i + 1, c});
        continue;
      }
      const double bridge_needed = dm * (kappa_ - 2.0 * eps_) * (1.0 - eps_) / (1.0 + eps_);
      if (!(bridge(mi, c - mi).log_gap() >= bridge_needed)) {
        record(i + 1, "bridge gap" + at);
        continue;
      }
      if (!(log_rift(mi, c) >= -5.0 * dm * eps_)) {
        record(i + 1, "rift" + at);
        continue;
      }
      times.push_back(c);
      if (extend(i + 1, times)) return true;
      times.pop_back();
      failed_.insert({i + 1, c});
    }
    return false;
  }

  const Cocycle& a_;
  const BaseSystem& s_;
  const Phase& x_;
  double eps_;
  double kappa_;
  std::vector<std::vector<std::int64_t>> windows_;
  std::map<std::int64_t, LogNorms> prefix_;
  std::map<std::pair<std::int64_t, std::int64_t>, LogNorms> bridges_;
  std::set<std::pair<std::size_t, std::int64_t>> failed_;
  std::string violation_;
  std::size_t violation_depth_ = 0;
};

}  // namespace

AvalancheSchedule avalanche_times(const Cocycle& a, const BaseSystem& s, const Phase& x, double eps,
                                  double kappa, std::int64_t n0, std::int64_t n) {
  if (a.dim() < 2) throw InvalidArgument("avalanche_times: needs dimension at least 2");
  if (!(eps > 0.0) || !(kappa > 2.0 * eps)) {
    throw InvalidArgument("avalanche_times: need 0 < eps and 2 eps < kappa");
  }
  const auto nominal = doubling_sequence(n0, n, eps);
  std::vector<std::vector<std::int64_t>> windows;
  for (std::size_t i = 0; i < nominal.size(); ++i) {
    const std::int64_t mi = nominal[i];
    if (i == 0 || i + 1 == nominal.size()) {
      windows.push_back({mi});
      continue;
    }
    std::vector<std::int64_t> w{mi};
    const double radius = eps * static_cast<double>(mi) / 6.0;
    for (std::int64_t d = 1; static_cast<double>(d) < radius; ++d) {
      w.push_back(mi + d);
      if (mi - d > 0) w.push_back(mi - d);
    }
    windows.push_back(std::move(w));
  }

  ScheduleSearch search(a, s, x, eps, kappa, windows);
  AvalancheSchedule out;
  out.n0 = n0;
  out.eps = eps;
  out.kappa = kappa;
  if (!search.run(out.times)) {
    throw NoSchedule("avalanche_times: no admissible schedule; violated condition: " + search.violation());
  }
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    out.log_gaps.push_back(search.gap(out.times[i]));
    if (i + 1 < out.times.size()) {
      const auto mi = out.times[i];
      const auto mj = out.times[i + 1];
      out.log_bridge_gaps.push_back(search.bridge(mi, mj - mi).log_gap());
      out.log_rifts.push_back(search.log_rift(mi, mj));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

ApReport ap_check(const std::vector<Matrix>& chain, double kappa_ap, double eps_ap) {
  if (chain.empty()) throw InvalidArgument("ap_check: empty chain");
  const auto m = chain.front().rows();
  for (const auto& g : chain) {
    require_square(g, "ap_check");
    require_finite(g, "ap_check");
    if (g.rows() != m) throw DimensionMismatch("ap_check: matrices differ in size");
  }
  if (m < 2) throw InvalidArgument("ap_check: needs dimension at least 2");
  if (!(kappa_ap > 0.0) || !(eps_ap > 0.0)) throw InvalidArgument("ap_check: kappa_ap and eps_ap must be positive");
  if (kappa_ap > kApAdmission * eps_ap * eps_ap) {
    throw HypothesisFailure(-1, "parameters", "ap_check: kappa_ap exceeds c*eps_ap^2 with c=0.01");
  }
  ApReport r;
  r.length = chain.size();
  r.kappa_ap = kappa_ap;
  r.eps_ap = eps_ap;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const double gr = gap_ratio(chain[i], 1);
    r.gaps.push_back(gr);
    if (!(gr > 1.0 / kappa_ap)) {
      throw HypothesisFailure(static_cast<int>(i), "gap",
                              "ap_check: gr(g_" + std::to_string(i) + ") does not exceed 1/kappa_ap");
    }
    if (i > 0) {
      const double rho = rift(chain[i - 1], chain[i]);
      r.rifts.push_back(rho);
      if (!(rho > eps_ap)) {
        throw HypothesisFailure(static_cast<int>(i), "angle",
                                "ap_check: rift(g_" + std::to_string(i - 1) + ", g_" + std::to_string(i) +
                                    ") does not exceed eps_ap");
      }
    }
  }
  ScaledMatrix product = ScaledMatrix::identity(static_cast<int>(m));
  for (const auto& g : chain) product.left_multiply(g);
  const SingularData whole = svd(product.factor());
  const SingularData first = svd(chain.front());
  const SingularData last = svd(chain.back());
  auto line = [](const Matrix& frame, int col) { return Subspace(Matrix(frame.col(col))); };
  r.distance_forward = subspace_distance(line(whole.right, 0), line(first.right, 0));
  r.distance_adjoint = subspace_distance(line(whole.left, 0), line(last.left, 0));
  const double unit = kappa_ap / eps_ap;
  r.bound = kApBound * unit;
  r.measured_constant = std::max(r.distance_forward, r.distance_adjoint) / unit;
  r.holds = r.distance_forward <= r.bound && r.distance_adjoint <= r.bound;
  return r;
}

// ---------------------------------------------------------------------------

PartialFlag oseledets_filtration(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n,
                                 const Signature& tau) {
  const PartialDirection d = finite_direction(a, s, x, n, tau);
  if (!d.defined) return {};
  return {true, complement_flag(d.value)};
}

PartialDecomposition oseledets_decomposition(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                             std::int64_t n, const Signature& tau, double theta_min) {
  const PartialDirection fwd = finite_direction(a, s, x, n, tau);
  if (!fwd.defined) return {};
  const PartialDirection adj = adjoint_direction(a, s, x, n, tau);
  if (!adj.defined) return {};
  const Flag stable = complement_flag(fwd.value);
  PartialDecomposition out;
  out.theta = transversality(adj.value, stable);
  out.value = intersect(adj.value, stable, theta_min);
  out.defined = true;
  return out;
}

InvarianceReport invariance_residual(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n,
                                     const Signature& tau, InvariantObject object) {
  const Phase tx = s.step(x, 1);
  std::vector<Subspace> here;
  std::vector<Subspace> there;
  if (object == InvariantObject::filtration) {
    const PartialFlag f0 = oseledets_filtration(a, s, x, n, tau);
    const PartialFlag f1 = oseledets_filtration(a, s, tx, n, tau);
    if (!f0.defined || !f1.defined) return {};
    here = f0.value.components();
    there = f1.value.components();
  } else {
    const PartialDecomposition d0 = oseledets_decomposition(a, s, x, n, tau);
    const PartialDecomposition d1 = oseledets_decomposition(a, s, tx, n, tau);
    if (!d0.defined || !d1.defined) return {};
    here = d0.value.components();
    there = d1.value.components();
  }
  const Matrix g = a(s, x);
  InvarianceReport r;
  r.defined = true;
  for (std::size_t j = 0; j < here.size(); ++j) {
    if (here[j].dim() == 0 || here[j].dim() == g.rows()) {
      r.residuals.push_back(0.0);
      r.collapsed.push_back(false);
      continue;
    }
    const Matrix image = g * here[j].basis();
    try {
      r.residuals.push_back(subspace_distance(Subspace::span_of(image, 1e-12), there[j]));
      r.collapsed.push_back(false);
    } catch (const InvalidArgument&) {
      r.residuals.push_back(kNaN);
      r.collapsed.push_back(true);
    }
  }
  return r;
}

GrowthReport growth_rate_along(const Cocycle& a, const BaseSystem& s, const Phase& x, const Vector& v,
                               const std::vector<std::int64_t>& n_list) {
  check_scales(n_list, "growth_rate_along");
  if (v.size() != a.dim()) throw DimensionMismatch("growth_rate_along: vector has the wrong length");
  const double vn = v.norm();
  if (!(vn > 0.0) || !std::isfinite(vn)) throw InvalidArgument("growth_rate_along: v must be nonzero and finite");
  GrowthReport r;
  r.scales = n_list;
  Vector w = v / vn;
  double log_acc = std::log(vn);
  Phase y = x;
  std::int64_t done = 0;
  std::vector<double> logs;
  for (std::int64_t target : n_list) {
    for (; done < target && !r.annihilated; ++done) {
      w = a(s, y) * w;
      const double nw = w.norm();
      if (!(nw > 0.0)) {
        r.annihilated = true;
        break;
      }
      log_acc += std::log(nw);
      w /= nw;
      y = s.step(y, 1);
    }
    const double total = r.annihilated ? -kInf : log_acc;
    logs.push_back(total);
    r.rates.push_back(total / static_cast<double>(target));
  }
  r.last = r.rates.back();
  if (r.annihilated) {
    r.slope = r.upper = r.lower = -kInf;
    return r;
  }
  if (n_list.size() >= 2) {
    std::vector<double> xs(n_list.begin(), n_list.end());
    r.slope = least_squares(xs, logs).slope;
  } else {
    r.slope = r.last;
  }
  const std::size_t tail = n_list.size() / 2;
  r.upper = *std::max_element(r.rates.begin() + static_cast<std::ptrdiff_t>(tail), r.rates.end());
  r.lower = *std::min_element(r.rates.begin() + static_cast<std::ptrdiff_t>(tail), r.rates.end());
  return r;
}

namespace {

// First-order log distance between the top-t right singular planes of
// A^{(n)} = U S V^T and of P U S V^T, with P = A^{(N-n)}(T^n x) given through
// its t-th exterior power. In V coordinates the plane of P U S is the graph of
// Y with Y_{ji} = (s_j / s_i) <W e_J, W e_0> / |W e_0|^2, W = wedge_t(P U),
// J = {0..t-1} with i replaced by j.
double first_order_log_distance(const std::vector<ScaledMatrix>& powers, const Matrix& future_wedge, int m,
                                int t) {
  std::vector<double> ls(static_cast<std::size_t>(m));
  double prev = 0.0;
  for (int k = 1; k <= m; ++k) {
    const double lk = powers[static_cast<std::size_t>(k - 1)].log_norm();
    ls[static_cast<std::size_t>(k - 1)] = lk - prev;
    prev = lk;
    if (!std::isfinite(lk)) return kNaN;
  }
  std::vector<int> all(static_cast<std::size_t>(m - 1));
  for (int k = 1; k < m; ++k) all[static_cast<std::size_t>(k - 1)] = k;
  const PartialDirection left = direction_from_powers(powers, m, Signature(m, all), 0, true);
  if (!left.defined) return kNaN;
  const Subspace& top = left.value[m - 2];
  Matrix u(m, m);
  u << top.basis(), top.complement().basis();

  const auto subsets = k_subsets(m, t);
  std::map<std::vector<int>, Eigen::Index> index;
  for (std::size_t i = 0; i < subsets.size(); ++i) index.emplace(subsets[i], static_cast<Eigen::Index>(i));
  const Matrix w = future_wedge * exterior_power(u, t);
  const Vector c0 = w.col(0);
  const double k00 = c0.squaredNorm();
  if (!(k00 > 0.0) || !std::isfinite(k00)) return kNaN;

  Matrix log_y(m - t, t);
  Matrix sign_y(m - t, t);
  double top_log = -kInf;
  for (int i = 0; i < t; ++i) {
    for (int j = t; j < m; ++j) {
      std::vector<int> subset;
      for (int r = 0; r < t; ++r) {
        if (r != i) subset.push_back(r);
      }
      subset.push_back(j);
      const double ratio = w.col(index.at(subset)).dot(c0) / k00;
      const double ly = ls[static_cast<std::size_t>(j)] - ls[static_cast<std::size_t>(i)] + std::log(std::abs(ratio));
      log_y(j - t, i) = ly;
      sign_y(j - t, i) = ((ratio < 0.0) != ((t - 1 - i) % 2 == 1)) ? -1.0 : 1.0;
      top_log = std::max(top_log, ly);
    }
  }
  if (top_log == -kInf) return -kInf;
  Matrix y(m - t, t);
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (Eigen::Index c = 0; c < y.cols(); ++c) y(r, c) = sign_y(r, c) * std::exp(log_y(r, c) - top_log);
  }
  const double sigma = Eigen::JacobiSVD<Matrix>(y).singularValues()(0);
  return sigma > 0.0 ? std::log(sigma) + top_log : -kInf;
}

}  // namespace

std::vector<std::vector<double>> log_scale_distances(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                                     const Signature& tau, const std::vector<std::int64_t>& n_list,
                                                     std::int64_t n_max) {
  check_scales(n_list, "log_scale_distances");
  if (n_list.back() >= n_max) throw InvalidArgument("log_scale_distances: every scale must be below n_max");
  const int m = a.dim();
  required_kmax(m, tau);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(tau.size()),
                                       std::vector<double>(n_list.size(), kNaN));
  if (tau.empty()) return out;

  std::vector<std::int64_t> scales = n_list;
  scales.push_back(n_max);
  const ExteriorIterates ex = exterior_iterates(a, s, x, scales, m);
  const PartialDirection ref = direction_from_powers(ex.powers.back(), m, tau, n_max, false);
  if (!ref.defined) return out;

  // Suffix products wedge_t A^{(n_max - n)}(T^n x) for every n in the list.
  std::vector<ScaledMatrix> suffix;
  for (int t : tau.dims()) suffix.push_back(ScaledMatrix::identity(static_cast<int>(binomial(m, t))));
  std::vector<std::vector<Matrix>> future(n_list.size());
  std::size_t next = n_list.size();
  for (std::int64_t j = n_max - 1; j >= n_list.front(); --j) {
    const Matrix g = a(s, s.step(x, j));
    for (int c = 0; c < tau.size(); ++c) suffix[static_cast<std::size_t>(c)].right_multiply(exterior_power(g, tau[c]));
    if (next > 0 && n_list[next - 1] == j) {
      --next;
      for (const auto& p : suffix) future[next].push_back(p.factor());
    }
  }

  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const auto& powers = ex.powers[i];
    const PartialDirection d = direction_from_powers(powers, m, tau, n_list[i], false);
    if (!d.defined) continue;
    for (int c = 0; c < tau.size(); ++c) {
      const double direct = subspace_distance(d.value[c], ref.value[c]);
      double value = direct > kDistanceFloor ? std::log(direct) : kNaN;
      if (!(direct > kRefineBelow)) {
        const double refined =
            first_order_log_distance(powers, future[i][static_cast<std::size_t>(c)], m, tau[c]);
        if (!std::isnan(refined)) value = refined;
      }
      out[static_cast<std::size_t>(c)][i] = value;
    }
  }
  return out;
}

ConvergenceReport convergence_rate(const Cocycle& a, const BaseSystem& s, const Phase& x, const Signature& tau,
                                   const std::vector<std::int64_t>& n_list) {
  check_scales(n_list, "convergence_rate");
  if (n_list.size() < 2) throw InvalidArgument("convergence_rate: need at least two scales");
  ConvergenceReport r;
  r.scales.assign(n_list.begin(), n_list.end() - 1);
  const PartialDirection ref = finite_direction(a, s, x, n_list.back(), tau);
  if (!ref.defined) return r;
  r.defined = true;
  r.log_distances = log_scale_distances(a, s, x, tau, r.scales, n_list.back());
  for (const auto& logs : r.log_distances) {
    std::vector<double> dist;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      dist.push_back(std::exp(logs[i]));
      if (std::isfinite(logs[i])) {
        xs.push_back(static_cast<double>(r.scales[i]));
        ys.push_back(logs[i]);
      }
    }
    double slope = -kInf;
    if (xs.size() >= 2) {
      slope = least_squares(xs, ys).slope;
    } else if (xs.size() == 1) {
      slope = ys[0] / xs[0];
    }
    r.distances.push_back(std::move(dist));
    r.slopes.push_back(slope);
    r.points_used.push_back(xs.size());
  }
  return r;
}

AlphaSeries alpha_alignment_series(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                   const std::vector<std::int64_t>& n_list) {
  check_scales(n_list, "alpha_alignment_series");
  if (a.dim() < 2) throw InvalidArgument("alpha_alignment_series: needs dimension at least 2");
  const Signature line(a.dim(), {1});
  const ExteriorIterates ex = exterior_iterates(a, s, x, n_list, 2);
  AlphaSeries out;
  out.scales = n_list;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const std::int64_t n = n_list[i];
    // (A*)^{(n)}(T^n x) is the transpose of A^{(n)}(x).
    const PartialDirection adj = direction_from_powers(ex.powers[i], a.dim(), line, n, true);
    const PartialDirection fwd = finite_direction(a, s, s.step(x, n), n, line);
    if (!adj.defined || !fwd.defined) {
      out.values.push_back(kNaN);
      out.defined.push_back(false);
      continue;
    }
    const double al = alignment(adj.value[0], fwd.value[0]);
    out.values.push_back(al > 0.0 ? std::log(al) / static_cast<double>(n) : -kInf);
    out.defined.push_back(true);
  }
  for (std::size_t i = out.values.size(); i-- > 0;) {
    if (out.defined[i]) {
      out.last_abs = std::abs(out.values[i]);
      break;
    }
  }
  return out;
}

}  // namespace oslab
