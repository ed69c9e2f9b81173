#include "oslab/ldtlab.hpp"

#include "oslab/errors.hpp"
#include "oslab/lyapunov.hpp"
#include "oslab/oseledets.hpp"
#include "oslab/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace oslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kReferenceStream = 0x7265666572656e63ULL;

std::uint64_t reference_seed(std::uint64_t seed) { return mix(seed, kReferenceStream); }

void require_sampling(std::int64_t n, std::size_t samples, const char* what) {
  if (n < 1) throw InvalidArgument(std::string(what) + ": n must be at least 1");
  if (samples < 1) throw InvalidArgument(std::string(what) + ": samples must be at least 1");
}

std::size_t count_true(const std::vector<char>& v) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), char{1}));
}

double mean_of(const std::vector<double>& v) {
  for (double x : v) {
    if (x == -kInf) return -kInf;
  }
  return mean_and_error(v).mean;
}

}  // namespace

Frequency make_frequency(std::size_t hits, std::size_t total) {
  Frequency f;
  f.hits = hits;
  f.total = total;
  if (total == 0) return f;
  const WilsonInterval w = wilson_interval(hits, total);
  f.value = static_cast<double>(hits) / static_cast<double>(total);
  f.lower = w.lower;
  f.upper = w.upper;
  return f;
}

FiberDeviation fiber_deviation_measure(const Cocycle& a, const BaseSystem& s, std::int64_t n, double eps,
                                       std::size_t samples, std::uint64_t seed, int threads,
                                       std::optional<double> reference) {
  require_sampling(n, samples, "fiber_deviation_measure");
  if (!(eps >= 0.0)) throw InvalidArgument("fiber_deviation_measure: eps must be nonnegative");
  FiberDeviation out;
  out.n = n;
  out.eps = eps;
  out.reference = reference ? *reference : estimate_L1(a, s, n, samples, reference_seed(seed), threads).value;
  const auto phases = s.sample_phases(samples, seed);
  const auto hit = parallel_map<char>(phases.size(), threads, [&](std::size_t i) {
    const double v = iterate(a, s, phases[i], n).value.log_norm() / static_cast<double>(n);
    return static_cast<char>(!(std::abs(v - out.reference) <= eps));
  });
  out.measure = make_frequency(count_true(hit), samples);
  return out;
}

FiberDeviation base_deviation_measure(const BaseSystem& s, const std::function<double(const Phase&)>& xi,
                                      std::int64_t n, double eps, std::size_t samples, std::uint64_t seed,
                                      int threads, std::optional<double> mean) {
  require_sampling(n, samples, "base_deviation_measure");
  if (!(eps >= 0.0)) throw InvalidArgument("base_deviation_measure: eps must be nonnegative");
  auto averages = [&](std::uint64_t sd) {
    const auto phases = s.sample_phases(samples, sd);
    return parallel_map<double>(phases.size(), threads,
                                [&](std::size_t i) { return s.birkhoff_average(xi, phases[i], n); });
  };
  FiberDeviation out;
  out.n = n;
  out.eps = eps;
  out.reference = mean ? *mean : mean_and_error(averages(reference_seed(seed))).mean;
  const auto values = averages(seed);
  std::size_t hits = 0;
  for (double v : values) hits += !(std::abs(v - out.reference) <= eps);
  out.measure = make_frequency(hits, samples);
  return out;
}

DeviationProfile deviation_profile(const Cocycle& a, const BaseSystem& s, const std::vector<std::int64_t>& scales,
                                   const std::vector<double>& epsilons, std::size_t samples, std::uint64_t seed,
                                   int threads) {
  if (scales.empty() || epsilons.empty()) throw InvalidArgument("deviation_profile: empty scales or epsilons");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] < 1 || (i > 0 && scales[i] <= scales[i - 1])) {
      throw InvalidArgument("deviation_profile: scales must be positive and strictly increasing");
    }
  }
  for (double e : epsilons) {
    if (!(e >= 0.0)) throw InvalidArgument("deviation_profile: epsilons must be nonnegative");
  }
  require_sampling(scales.front(), samples, "deviation_profile");

  auto rates = [&](std::uint64_t sd) {
    const auto phases = s.sample_phases(samples, sd);
    return parallel_map<std::vector<double>>(phases.size(), threads, [&](std::size_t i) {
      const auto its = iterate_scales(a, s, phases[i], scales);
      std::vector<double> v(scales.size());
      for (std::size_t k = 0; k < scales.size(); ++k) v[k] = its[k].log_norm() / static_cast<double>(scales[k]);
      return v;
    });
  };
  const auto ref_rows = rates(reference_seed(seed));
  const auto rows = rates(seed);

  DeviationProfile p;
  p.scales = scales;
  p.epsilons = epsilons;
  for (std::size_t k = 0; k < scales.size(); ++k) {
    std::vector<double> col(samples);
    for (std::size_t i = 0; i < samples; ++i) col[i] = ref_rows[i][k];
    const double ref = mean_of(col);
    p.references.push_back(ref);
    std::vector<Frequency> row;
    for (double e : epsilons) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < samples; ++i) hits += !(std::abs(rows[i][k] - ref) <= e);
      row.push_back(make_frequency(hits, samples));
    }
    p.measures.push_back(std::move(row));
  }
  return p;
}

// ---------------------------------------------------------------------------

namespace {

// Per-point data at block length k: whether y is in ldt_m for m = k (own) or
// for some m in [k, 3k] (window), and whether it is in g.
struct PointFlags {
  bool ldt_own = false;
  bool ldt_window = false;
  bool gap_bad = false;
};

class ExceptionalEvaluator {
 public:
  ExceptionalEvaluator(const Cocycle& b, const BaseSystem& s, std::int64_t n, double kappa, double eps_n,
                       std::vector<double> references)
      : b_(b), s_(s), n_(n), kappa_(kappa), eps_n_(eps_n), refs_(std::move(references)) {}

  // references[m - n] = L_1^{(m)} for m in [n, 6n].
  PointFlags at(const Phase& y, std::int64_t k) const {
    std::vector<std::int64_t> scales;
    for (std::int64_t m = k; m <= 3 * k; ++m) scales.push_back(m);
    const ExteriorIterates ex = exterior_iterates(b_, s_, y, scales, 2);
    PointFlags f;
    for (std::size_t i = 0; i < scales.size(); ++i) {
      const std::int64_t m = scales[i];
      const double rate = ex.log_norm(i, 1) / static_cast<double>(m);
      const double ref = refs_[static_cast<std::size_t>(m - n_)];
      const bool out = !(std::abs(rate - ref) <= eps_n_);
      if (i == 0) f.ldt_own = out;
      f.ldt_window = f.ldt_window || out;
    }
    const double l1 = ex.log_norm(0, 1);
    const double l2 = ex.log_norm(0, 2);
    const double log_gap = (l1 == -kInf) ? 0.0 : (l2 == -kInf ? kInf : 2.0 * l1 - l2);
    f.gap_bad = !(log_gap > static_cast<double>(k) * kappa_ / 2.0);
    return f;
  }

 private:
  const Cocycle& b_;
  const BaseSystem& s_;
  std::int64_t n_;
  double kappa_;
  double eps_n_;
  std::vector<double> refs_;
};

std::int64_t shift_count(double mes, std::int64_t k, std::int64_t cap) {
  const double raw = 1.0 / (static_cast<double>(k) * std::sqrt(mes));
  const double bounded = std::min(raw, static_cast<double>(cap));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(bounded)));
}

}  // namespace

ExceptionalSets exceptional_set_frequency(const Cocycle& b, const BaseSystem& s, std::int64_t n, double kappa,
                                          std::size_t samples, std::uint64_t seed, int threads, double eps_n,
                                          std::int64_t max_shifts) {
  require_sampling(n, samples, "exceptional_set_frequency");
  if (b.dim() < 2) throw InvalidArgument("exceptional_set_frequency: needs dimension at least 2");
  if (!(kappa > 0.0)) throw InvalidArgument("exceptional_set_frequency: kappa must be positive");
  if (max_shifts < 1) throw InvalidArgument("exceptional_set_frequency: max_shifts must be at least 1");
  ExceptionalSets r;
  r.n = n;
  r.kappa = kappa;
  r.eps_n = eps_n < 0.0 ? kappa / 100.0 : eps_n;

  // References L_1^{(m)}, n <= m <= 6n, from an independent sample in one pass.
  std::vector<std::int64_t> ref_scales;
  for (std::int64_t m = n; m <= 6 * n; ++m) ref_scales.push_back(m);
  const auto ref_phases = s.sample_phases(samples, reference_seed(seed));
  const auto ref_rows = parallel_map<std::vector<double>>(ref_phases.size(), threads, [&](std::size_t i) {
    const auto its = iterate_scales(b, s, ref_phases[i], ref_scales);
    std::vector<double> v(its.size());
    for (std::size_t k = 0; k < its.size(); ++k) v[k] = its[k].log_norm() / static_cast<double>(ref_scales[k]);
    return v;
  });
  std::vector<double> refs(ref_scales.size());
  std::vector<double> col(samples);
  for (std::size_t k = 0; k < ref_scales.size(); ++k) {
    for (std::size_t i = 0; i < samples; ++i) col[i] = ref_rows[i][k];
    refs[k] = mean_of(col);
  }
  const ExceptionalEvaluator eval(b, s, n, kappa, r.eps_n, std::move(refs));
  const auto phases = s.sample_phases(samples, seed);

  // First pass: the phase itself at block lengths n and 2n.
  const auto first = parallel_map<std::array<PointFlags, 2>>(phases.size(), threads, [&](std::size_t i) {
    return std::array<PointFlags, 2>{eval.at(phases[i], n), eval.at(phases[i], 2 * n)};
  });
  std::array<std::int64_t, 2> shifts{};
  for (int level = 0; level < 2; ++level) {
    std::size_t ldt = 0;
    std::size_t gap = 0;
    for (const auto& f : first) {
      ldt += f[static_cast<std::size_t>(level)].ldt_own;
      gap += f[static_cast<std::size_t>(level)].gap_bad;
    }
    const double mes = std::max({static_cast<double>(ldt) / static_cast<double>(samples),
                                 static_cast<double>(gap) / static_cast<double>(samples),
                                 1.0 / static_cast<double>(samples)});
    const std::int64_t k = n << level;
    shifts[static_cast<std::size_t>(level)] = shift_count(mes, k, max_shifts);
    if (level == 0) r.mes_n = mes;
  }
  r.shifts = shifts[0];

  // Second pass: the shifted points T^{jk} x, j = 1..K.
  struct Membership {
    char ldt = 0, g = 0, a = 0, ga = 0, ap = 0, flat = 0;
  };
  const auto rows = parallel_map<Membership>(phases.size(), threads, [&](std::size_t i) {
    Membership mb;
    bool ap_any[2] = {false, false};
    for (int level = 0; level < 2; ++level) {
      const std::int64_t k = n << level;
      const std::int64_t count = shifts[static_cast<std::size_t>(level)];
      std::vector<PointFlags> pts{first[i][static_cast<std::size_t>(level)]};
      for (std::int64_t j = 1; j <= count; ++j) pts.push_back(eval.at(s.step(phases[i], j * k), k));
      for (std::int64_t j = 0; j < count; ++j) {
        const auto& p = pts[static_cast<std::size_t>(j)];
        const bool a_set = p.ldt_window || pts[static_cast<std::size_t>(j + 1)].ldt_window;
        const bool ga = p.gap_bad || a_set;
        if (level == 0 && j == 0) {
          mb.ldt = p.ldt_own;
          mb.g = p.gap_bad;
          mb.a = a_set;
          mb.ga = ga;
        }
        ap_any[level] = ap_any[level] || ga;
      }
    }
    mb.ap = ap_any[0];
    mb.flat = ap_any[0] || ap_any[1];
    return mb;
  });

  std::size_t c_ldt = 0, c_g = 0, c_a = 0, c_ga = 0, c_ap = 0, c_flat = 0;
  bool nested = true;
  for (const auto& mb : rows) {
    c_ldt += mb.ldt;
    c_g += mb.g;
    c_a += mb.a;
    c_ga += mb.ga;
    c_ap += mb.ap;
    c_flat += mb.flat;
    nested = nested && (!mb.ga || mb.ap) && (!mb.ap || mb.flat);
  }
  r.ldt = make_frequency(c_ldt, samples);
  r.g = make_frequency(c_g, samples);
  r.a = make_frequency(c_a, samples);
  r.ga = make_frequency(c_ga, samples);
  r.ap = make_frequency(c_ap, samples);
  r.flat = make_frequency(c_flat, samples);
  r.union_bound_holds = c_ga <= c_g + c_a;
  r.nested = nested;
  return r;
}

SpeedReport speed_of_convergence_check(const Cocycle& b, const BaseSystem& s, std::int64_t n, double kappa,
                                       std::size_t samples, std::uint64_t seed, int threads, std::int64_t n_max) {
  require_sampling(n, samples, "speed_of_convergence_check");
  if (b.dim() < 2) throw InvalidArgument("speed_of_convergence_check: needs dimension at least 2");
  if (!(kappa > 0.0)) throw InvalidArgument("speed_of_convergence_check: kappa must be positive");
  SpeedReport r;
  r.n = n;
  r.n_max = n_max > 0 ? n_max : n * n;
  r.kappa = kappa;
  r.log_bound = -3.0 * static_cast<double>(n) * kappa / 10.0;
  const Signature line(b.dim(), {1});
  const auto phases = s.sample_phases(samples, seed);
  r.log_distances = parallel_map<double>(phases.size(), threads, [&](std::size_t i) {
    if (n >= r.n_max) {
      return finite_direction(b, s, phases[i], n, line).defined ? -kInf : kNaN;
    }
    const auto dirs = finite_directions(b, s, phases[i], {n, r.n_max}, line);
    if (!dirs[0].defined || !dirs[1].defined) return kNaN;
    const double ld = log_scale_distances(b, s, phases[i], line, {n}, r.n_max)[0][0];
    // Lost in round-off: the floor bounds the distance from above.
    return std::isnan(ld) ? std::log(kDistanceFloor) : ld;
  });
  std::size_t bad = 0;
  for (double ld : r.log_distances) {
    if (std::isnan(ld)) {
      ++r.undefined;
      ++bad;
    } else if (ld >= r.log_bound) {
      ++bad;
    }
  }
  r.violations = make_frequency(bad, samples);
  return r;
}

// ---------------------------------------------------------------------------

ContinuityTarget parse_continuity_target(const std::string& name) {
  if (name == "direction") return ContinuityTarget::direction;
  if (name == "filtration") return ContinuityTarget::filtration;
  if (name == "decomposition") return ContinuityTarget::decomposition;
  throw InvalidArgument("unknown continuity target '" + name + "' (direction, filtration, decomposition)");
}

std::string to_string(ContinuityTarget target) {
  switch (target) {
    case ContinuityTarget::direction:
      return "direction";
    case ContinuityTarget::filtration:
      return "filtration";
    case ContinuityTarget::decomposition:
      return "decomposition";
  }
  return "direction";
}

namespace {

// The tau-restricted target at one phase; empty optional when undefined.
struct Target {
  std::optional<Flag> flag;
  std::optional<Decomposition> decomposition;
  bool defined() const { return flag.has_value() || decomposition.has_value(); }
};

Target compute_target(const Cocycle& c, const BaseSystem& s, const Phase& x, std::int64_t n,
                      ContinuityTarget target, const Signature& own, const Signature& tau) {
  Target out;
  if (target == ContinuityTarget::decomposition) {
    try {
      const PartialDecomposition d = oseledets_decomposition(c, s, x, n, own);
      if (d.defined) out.decomposition = project_decomposition(d.value, tau);
    } catch (const NonTransversal&) {
    }
    return out;
  }
  const PartialDirection d = finite_direction(c, s, x, n, own);
  if (!d.defined) return out;
  const Flag f = project_flag(d.value, tau);
  out.flag = target == ContinuityTarget::filtration ? complement_flag(f) : f;
  return out;
}

double target_distance(const Target& p, const Target& q) {
  if (p.flag) return flag_distance(*p.flag, *q.flag);
  return decomposition_distance(*p.decomposition, *q.decomposition);
}

}  // namespace

std::vector<ContinuityRecord> continuity_experiment(const Cocycle& a, const CocycleFamily& family,
                                                    const std::vector<double>& h_list, const BaseSystem& s,
                                                    const ContinuityOptions& o) {
  require_sampling(o.n, o.samples, "continuity_experiment");
  if (h_list.empty()) throw InvalidArgument("continuity_experiment: empty h list");
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    if (!(h_list[i] >= 0.0) || (i > 0 && !(h_list[i] < h_list[i - 1]))) {
      throw InvalidArgument("continuity_experiment: h list must be nonnegative and strictly decreasing");
    }
  }
  if (o.tau.ambient_dim() != a.dim()) throw DimensionMismatch("continuity_experiment: tau has the wrong dimension");
  const Signature tau_b = o.tau_b.value_or(o.tau);
  if (tau_b.ambient_dim() != a.dim()) throw DimensionMismatch("continuity_experiment: tau_b has the wrong dimension");
  if (!refines(tau_b, o.tau)) throw NotARefinement("continuity_experiment: tau_b must refine tau");

  const auto phases = s.sample_phases(o.samples, o.seed);
  const auto base = parallel_map<Target>(phases.size(), o.threads, [&](std::size_t i) {
    return compute_target(a, s, phases[i], o.n, o.target, o.tau, o.tau);
  });

  std::vector<ContinuityRecord> out;
  for (double h : h_list) {
    const Cocycle b = family(h);
    if (b.dim() != a.dim()) throw DimensionMismatch("continuity_experiment: family changes the dimension");
    struct Point {
      double distance = kNaN;
      double generator_gap = 0.0;
    };
    const auto pts = parallel_map<Point>(phases.size(), o.threads, [&](std::size_t i) {
      Point p;
      p.generator_gap = operator_norm(b(s, phases[i]) - a(s, phases[i]));
      if (!base[i].defined()) return p;
      const Target t = compute_target(b, s, phases[i], o.n, o.target, tau_b, o.tau);
      if (t.defined()) p.distance = target_distance(t, base[i]);
      return p;
    });
    ContinuityRecord rec;
    rec.h = h;
    rec.alpha_trial = o.alpha_trial;
    const double level = std::pow(h, o.alpha_trial);
    std::size_t exceed = 0;
    for (const auto& p : pts) {
      rec.cocycle_distance = std::max(rec.cocycle_distance, p.generator_gap);
      if (std::isnan(p.distance)) {
        ++rec.undefined;
        continue;
      }
      rec.distances.push_back(p.distance);
      exceed += p.distance > level;
    }
    rec.defined = rec.distances.size();
    std::sort(rec.distances.begin(), rec.distances.end());
    if (rec.defined > 0) {
      rec.mean = pairwise_sum(rec.distances.data(), rec.distances.size()) / static_cast<double>(rec.defined);
      rec.q50 = quantile(rec.distances, 0.5);
      rec.q90 = quantile(rec.distances, 0.9);
      rec.exceed_fraction = static_cast<double>(exceed) / static_cast<double>(rec.defined);
    } else {
      rec.mean = rec.q50 = rec.q90 = rec.exceed_fraction = kNaN;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

ModulusFit modulus_fit(const std::vector<ContinuityRecord>& records) {
  ModulusFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  bool any_positive = false;
  for (const auto& r : records) {
    if (!(r.h > 0.0) || !std::isfinite(r.mean)) continue;
    if (r.mean > 0.0) {
      any_positive = true;
      xs.push_back(std::log(r.h));
      ys.push_back(std::log(r.mean));
    }
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (!any_positive) {
    fit.reason = "all mean distances are zero";
    return fit;
  }
  if (distinct.size() < 3) {
    fit.reason = "fewer than three distinct h with positive mean distance";
    return fit;
  }
  const LinearFit lf = least_squares(xs, ys);
  fit.defined = true;
  fit.alpha = lf.slope;
  fit.intercept = lf.intercept;
  fit.residuals = lf.residuals;
  fit.points = xs.size();
  return fit;
}

}  // namespace oslab
