#include "oslab/lyapunov.hpp"

#include "oslab/errors.hpp"
#include "oslab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace oslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMonotoneSlack = 1e-9;

void require_positive(std::int64_t n, std::size_t samples, const char* what) {
  if (n < 1) throw InvalidArgument(std::string(what) + ": n must be at least 1");
  if (samples < 1) throw InvalidArgument(std::string(what) + ": samples must be at least 1");
}

// Mean with -inf propagation: one vanishing sample makes the integral -inf.
std::pair<double, double> aggregate(const std::vector<double>& v) {
  for (double x : v) {
    if (x == -kInf) return {-kInf, 0.0};
  }
  const MeanAndError me = mean_and_error(v);
  return {me.mean, me.std_error};
}

}  // namespace

L1Estimate estimate_L1(const Cocycle& a, const BaseSystem& s, std::int64_t n, std::size_t samples,
                       std::uint64_t seed, int threads, Sampling sampling) {
  require_positive(n, samples, "estimate_L1");
  const auto phases = s.sample_phases(samples, seed, sampling);
  const auto per = parallel_map<double>(phases.size(), threads, [&](std::size_t i) {
    return iterate(a, s, phases[i], n).value.log_norm() / static_cast<double>(n);
  });
  L1Estimate out;
  out.samples = samples;
  out.zero_products = static_cast<std::size_t>(std::count(per.begin(), per.end(), -kInf));
  std::tie(out.value, out.std_error) = aggregate(per);
  return out;
}

SpectrumEstimate spectrum_at_phases(const Cocycle& a, const BaseSystem& s, std::int64_t n,
                                    const std::vector<Phase>& phases, int threads) {
  require_positive(n, phases.size(), "estimate_spectrum");
  const int m = a.dim();
  const double dn = static_cast<double>(n);
  // Row layout per sample: [L_1..L_m, l_1..l_m] with l_k = (1/n) log ||wedge_k||.
  const auto rows = parallel_map<std::vector<double>>(phases.size(), threads, [&](std::size_t i) {
    const ExteriorIterates ex = exterior_iterates(a, s, phases[i], {n}, m);
    std::vector<double> row(static_cast<std::size_t>(2 * m));
    bool dead = false;
    double prev = 0.0;
    for (int k = 1; k <= m; ++k) {
      const double lk = ex.log_norm(0, k) / dn;
      row[static_cast<std::size_t>(m + k - 1)] = lk;
      double li = lk - prev;
      if (dead || !std::isfinite(li) || li < kMinusInfinityLevel) {
        dead = true;
        li = -kInf;
      }
      row[static_cast<std::size_t>(k - 1)] = li;
      prev = lk;
    }
    return row;
  });

  SpectrumEstimate est;
  est.n = n;
  est.sample_count = phases.size();
  std::vector<double> column(phases.size());
  for (int c = 0; c < 2 * m; ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i][static_cast<std::size_t>(c)];
    const auto [mean, se] = aggregate(column);
    if (c < m) {
      est.values.push_back(mean);
      est.std_errors.push_back(se);
    } else {
      est.wedge_values.push_back(mean);
      est.wedge_errors.push_back(se);
    }
  }
  for (int i = 1; i < m; ++i) {
    auto& cur = est.values[static_cast<std::size_t>(i)];
    const double prev = est.values[static_cast<std::size_t>(i - 1)];
    if (prev == -kInf) {
      cur = -kInf;
      est.std_errors[static_cast<std::size_t>(i)] = 0.0;
    } else if (cur > prev && cur - prev < kMonotoneSlack) {
      cur = prev;
    }
  }
  return est;
}

SpectrumEstimate estimate_spectrum(const Cocycle& a, const BaseSystem& s, std::int64_t n, std::size_t samples,
                                   std::uint64_t seed, int threads, Sampling sampling) {
  require_positive(n, samples, "estimate_spectrum");
  return spectrum_at_phases(a, s, n, s.sample_phases(samples, seed, sampling), threads);
}

double default_gap_threshold(const SpectrumEstimate& est) {
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < est.values.size(); ++j) {
    const double c = std::hypot(est.std_errors[j], est.std_errors[j + 1]);
    if (std::isfinite(c)) worst = std::max(worst, c);
  }
  return std::max(0.05, 5.0 * worst);
}

GapPattern detect_gap_pattern(const SpectrumEstimate& est, double threshold) {
  const int m = static_cast<int>(est.values.size());
  if (m < 1) throw InvalidArgument("detect_gap_pattern: empty spectrum");
  GapPattern out;
  out.threshold = threshold < 0.0 ? default_gap_threshold(est) : threshold;
  auto diff = [&](int j) {  // L_j - L_{j+1}, 1-based j
    const double hi = est.values[static_cast<std::size_t>(j - 1)];
    const double lo = est.values[static_cast<std::size_t>(j)];
    if (hi == -kInf && lo == -kInf) return 0.0;
    return hi - lo;
  };
  std::vector<int> tau;
  for (int j = 1; j < m; ++j) {
    const double d = diff(j);
    if (d > out.threshold) {
      tau.push_back(j);
      out.gap = std::min(out.gap, d);
    }
  }
  out.tau = Signature(m, tau);
  int start = 1;
  for (int b = 0; b <= out.tau.size(); ++b) {
    const int end = out.tau.padded(b + 1);
    const double hi = est.values[static_cast<std::size_t>(start - 1)];
    const double lo = est.values[static_cast<std::size_t>(end - 1)];
    const double spread = (hi == lo) ? 0.0 : hi - lo;
    if (!(spread <= out.threshold)) out.exact = false;
    start = end + 1;
  }
  return out;
}

FeketeReport fekete_diagnostic(const std::vector<std::pair<std::int64_t, double>>& seq) {
  FeketeReport r;
  if (seq.empty()) return r;
  std::map<std::int64_t, double> by_n;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i].first < 1 || (i > 0 && seq[i].first <= seq[i - 1].first)) {
      throw InvalidArgument("fekete_diagnostic: n must be positive and strictly increasing");
    }
    by_n[seq[i].first] = seq[i].second;
    r.inf_ratio = std::min(r.inf_ratio, seq[i].second / static_cast<double>(seq[i].first));
  }
  r.last_ratio = seq.back().second / static_cast<double>(seq.back().first);
  r.limit_gap = r.last_ratio - r.inf_ratio;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t j = i; j < seq.size(); ++j) {
      const auto it = by_n.find(seq[i].first + seq[j].first);
      if (it == by_n.end()) continue;
      ++r.pairs_checked;
      const double excess = it->second - seq[i].second - seq[j].second;
      if (excess > 0.0) {
        r.violations.push_back({seq[i].first, seq[j].first, excess});
        r.max_excess = std::max(r.max_excess, excess);
      }
    }
  }
  return r;
}

LpReport lp_bound_estimate(const Cocycle& a, const BaseSystem& s, const std::vector<std::int64_t>& n_list,
                           std::size_t samples, double p, std::uint64_t seed, int threads) {
  if (n_list.empty()) throw InvalidArgument("lp_bound_estimate: empty scale list");
  if (!(p >= 1.0)) throw InvalidArgument("lp_bound_estimate: p must be at least 1 (or +inf)");
  const auto phases = s.sample_phases(samples, seed);
  const auto rows = parallel_map<std::vector<double>>(phases.size(), threads, [&](std::size_t i) {
    const auto its = iterate_scales(a, s, phases[i], n_list);
    std::vector<double> v(n_list.size());
    for (std::size_t k = 0; k < n_list.size(); ++k) v[k] = its[k].log_norm() / static_cast<double>(n_list[k]);
    return v;
  });
  LpReport r;
  r.p = p;
  r.scales = n_list;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    std::vector<double> col(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = std::abs(rows[i][k]);
    double norm = 0.0;
    if (std::isinf(p)) {
      norm = *std::max_element(col.begin(), col.end());
    } else {
      for (double& c : col) c = std::pow(c, p);
      norm = std::pow(pairwise_sum(col.data(), col.size()) / static_cast<double>(col.size()), 1.0 / p);
    }
    r.norms.push_back(norm);
  }
  r.nonuniform = r.norms.back() > 2.0 * r.norms.front() + 1e-12;
  return r;
}

double cauchy_gap(const Cocycle& a, const BaseSystem& s, std::int64_t n, std::size_t samples, std::uint64_t seed,
                  int threads) {
  require_positive(n, samples, "cauchy_gap");
  const auto phases = s.sample_phases(samples, seed);
  const auto diffs = parallel_map<double>(phases.size(), threads, [&](std::size_t i) {
    const auto its = iterate_scales(a, s, phases[i], {n, 2 * n});
    return its[1].log_norm() / static_cast<double>(2 * n) - its[0].log_norm() / static_cast<double>(n);
  });
  return std::abs(aggregate(diffs).first);
}

}  // namespace oslab
