// Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "oslab/errors.hpp"
#include "oslab/grassmann.hpp"
#include "oslab/ldtlab.hpp"
#include "oslab/linalg.hpp"
#include "oslab/lyapunov.hpp"
#include "oslab/oseledets.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace oslab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Matrix gaussian(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) g(i, j) = n(rng);
  return g;
}

Matrix orthogonal(int m, std::mt19937_64& rng) {
  return Eigen::HouseholderQR<Matrix>(gaussian(m, m, rng)).householderQ();
}

double rel(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

// 1. Exterior powers ------------------------------------------------------------

Outcome exterior_identities() {
  std::mt19937_64 rng(101);
  double worst_sv = 0.0, worst_mult = 0.0, worst_pinv = 0.0;
  for (int c = 0; c < 100; ++c) {
    const int m = 1 + c % 6;
    Matrix g = gaussian(m, m, rng);
    if (c % 4 == 3 && m > 1) g = gaussian(m, m - 1, rng) * gaussian(m - 1, m, rng);  // rank deficient
    const Matrix h = gaussian(m, m, rng);
    const Eigen::VectorXd s = Eigen::JacobiSVD<Matrix>(g).singularValues();
    for (int k = 1; k <= m; ++k) {
      const double lower = operator_norm(exterior_power(g, k - 1));
      const double upper = operator_norm(exterior_power(g, k));
      if (lower > 1e-300 && s(k - 1) > 1e-12 * s(0)) {
        worst_sv = std::max(worst_sv, std::abs(s(k - 1) - upper / lower) / s(k - 1));
      }
      const Matrix wg = exterior_power(g, k);
      const Matrix wh = exterior_power(h, k);
      // errors relative to the operator scale; for rank-deficient g both sides
      // of the k = m identities vanish and only round-off remains
      const double hs = operator_norm(h);
      worst_mult = std::max(worst_mult,
                            (exterior_power(g * h, k) - wg * wh).norm() / std::pow(s(0) * hs, k));
      // the numerical rank of wedge_k g is decided at the scale ||g||^k
      const double wnorm = operator_norm(wg);
      const double cutoff = wnorm > 0.0 ? std::min(1.0, 1e-13 * std::pow(s(0), k) / wnorm) : 1.0;
      const Matrix gp = pseudo_inverse(g);
      const double scale = std::max(std::pow(operator_norm(gp), k), 1e-300);
      worst_pinv = std::max(worst_pinv, (exterior_power(gp, k) - pseudo_inverse(wg, cutoff)).norm() / scale);
    }
  }
  const double worst = std::max({worst_sv, worst_mult, worst_pinv});
  return {worst <= 1e-9, "s_k ratio " + fmt("%.1e", worst_sv) + ", multiplicativity " + fmt("%.1e", worst_mult) +
                             ", pseudo-inverse " + fmt("%.1e", worst_pinv) + " (tol 1e-9)"};
}

// 2. Avalanche Principle ----------------------------------------------------------

struct Chain {
  std::vector<Matrix> blocks;
  double kappa_ap = 0.0;
  double eps_ap = 0.0;
};

// Blocks g_i = U_i diag(sigma) V_i^T whose top input direction v_i makes a
// prescribed angle with the top output direction u_{i-1} of the previous block.
Chain random_chain(std::mt19937_64& rng, bool constant_axes) {
  std::uniform_int_distribution<int> dim(2, 4), len(2, 50);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const int m = dim(rng);
    const int n = len(rng);
    std::vector<double> cosines(static_cast<std::size_t>(n), 1.0);
    for (int i = 1; i < n; ++i) cosines[static_cast<std::size_t>(i)] = 0.1 + 0.9 * unit(rng);
    const double eps_target = *std::min_element(cosines.begin(), cosines.end());
    const double min_gap = 100.0 / (eps_target * eps_target) * 1.05;
    Chain ch;
    Vector u_prev;
    const Matrix axes = orthogonal(m, rng);
    for (int i = 0; i < n; ++i) {
      Vector sigma(m);
      sigma(0) = min_gap * std::pow(10.0, 2.0 * unit(rng));
      for (int j = 1; j < m; ++j) sigma(j) = unit(rng) + 1e-3;
      std::sort(sigma.data() + 1, sigma.data() + m, std::greater<>());
      if (constant_axes) {
        ch.blocks.push_back(axes * sigma.asDiagonal() * axes.transpose());
        continue;
      }
      Matrix v = orthogonal(m, rng);
      if (i > 0) {
        Vector w = v.col(0) - u_prev * u_prev.dot(v.col(0));
        w.normalize();
        const double c = cosines[static_cast<std::size_t>(i)];
        Matrix seed = gaussian(m, m, rng);
        seed.col(0) = c * u_prev + std::sqrt(1.0 - c * c) * w;
        v = Eigen::HouseholderQR<Matrix>(seed).householderQ();
        if (v.col(0).dot(seed.col(0)) < 0) v.col(0) *= -1.0;
      }
      const Matrix u = orthogonal(m, rng);
      ch.blocks.push_back(u * sigma.asDiagonal() * v.transpose());
      u_prev = u.col(0);
    }
    double gmin = INFINITY, rmin = INFINITY;
    for (std::size_t i = 0; i < ch.blocks.size(); ++i) {
      gmin = std::min(gmin, gap_ratio(ch.blocks[i], 1));
      if (i > 0) rmin = std::min(rmin, rift(ch.blocks[i - 1], ch.blocks[i]));
    }
    ch.kappa_ap = 1.0 / gmin * (1.0 + 1e-9);
    ch.eps_ap = (ch.blocks.size() > 1 ? rmin : 1.0) * (1.0 - 1e-9);
    if (gmin >= 1e4 && ch.eps_ap >= 0.1 && ch.kappa_ap <= kApAdmission * ch.eps_ap * ch.eps_ap) return ch;
  }
}

Outcome avalanche_principle() {
  std::mt19937_64 rng(202);
  int fails = 0, axis_fails = 0;
  double worst_constant = 0.0, worst_axis = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const bool axes = c % 10 == 9;
    const Chain ch = random_chain(rng, axes);
    try {
      const ApReport r = ap_check(ch.blocks, ch.kappa_ap, ch.eps_ap);
      const double d = std::max(r.distance_forward, r.distance_adjoint);
      if (d > kApBound * ch.kappa_ap / ch.eps_ap) ++fails;
      worst_constant = std::max(worst_constant, r.measured_constant);
      if (axes) {
        worst_axis = std::max(worst_axis, d);
        if (d > 1e-10) ++axis_fails;
      }
    } catch (const Error& e) {
      ++fails;
    }
  }
  return {fails == 0 && axis_fails == 0,
          std::to_string(1000 - fails) + "/1000 chains within 100 kappa/eps (largest constant " +
              fmt("%.3g", worst_constant) + "), constant-axis max distance " + fmt("%.1e", worst_axis)};
}

// 3. Constant cocycles ------------------------------------------------------------

Outcome constant_oracle() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const BaseSystem s = BaseSystem::golden_rotation();
  const Phase x = s.sample_phases(1, 1)[0];
  const std::int64_t n = 500;
  double worst_l = 0.0, worst_e = 0.0;
  int fails = 0;
  for (int c = 0; c < 50; ++c) {
    const int m = 2 + c % 4;
    std::vector<double> logs;
    for (;;) {
      logs.clear();
      for (int i = 0; i < m; ++i) logs.push_back(-1.5 + 3.0 * unit(rng));
      std::sort(logs.begin(), logs.end(), std::greater<>());
      bool spread = true;
      for (int i = 1; i < m; ++i) spread = spread && logs[static_cast<std::size_t>(i - 1)] - logs[static_cast<std::size_t>(i)] > 0.2;
      if (spread) break;
    }
    Matrix p;
    do {
      p = orthogonal(m, rng) + 0.15 * gaussian(m, m, rng) / std::sqrt(m);
      const Eigen::VectorXd sv = Eigen::JacobiSVD<Matrix>(p).singularValues();
      if (sv(0) / sv(m - 1) <= 1.5) break;
    } while (true);
    Vector lambda(m);
    for (int i = 0; i < m; ++i) lambda(i) = (unit(rng) < 0.5 ? -1.0 : 1.0) * std::exp(logs[static_cast<std::size_t>(i)]);
    const Matrix g = p * lambda.asDiagonal() * p.inverse();
    const Cocycle a = constant_cocycle(g);
    const SpectrumEstimate est = estimate_spectrum(a, s, n, 1, 0);
    for (int i = 0; i < m; ++i) {
      const double err = std::abs(est.values[static_cast<std::size_t>(i)] - logs[static_cast<std::size_t>(i)]);
      worst_l = std::max(worst_l, err);
      if (err > 2.0 / n + 1e-9) ++fails;
    }
    std::vector<int> dims;
    for (int t = 1; t < m; ++t) dims.push_back(t);
    try {
      const PartialDecomposition d = oseledets_decomposition(a, s, x, n, Signature(m, dims));
      if (!d.defined) {
        ++fails;
        continue;
      }
      for (int j = 0; j < m; ++j) {
        const double e = subspace_distance(d.value[j], Subspace::span_of(p.col(j)));
        worst_e = std::max(worst_e, e);
        if (e > 1e-6) ++fails;
      }
    } catch (const Error&) {
      ++fails;
    }
  }
  return {fails == 0, "max |L_i - log|lambda_i|| " + fmt("%.2e", worst_l) + " (tol " + fmt("%.3g", 2.0 / n + 1e-9) +
                          "), max eigenspace distance " + fmt("%.1e", worst_e) + " (tol 1e-6)"};
}

// 4. Random diagonal cocycle ----------------------------------------------------------

Outcome random_diagonal() {
  const BaseSystem s = BaseSystem::bernoulli({0.5, 0.5});
  const Cocycle a = diagonal_random_cocycle({{2.0, 0.5}});
  const L1Estimate l1 = estimate_L1(a, s, 1000, 1000, 404);
  bool pass = std::abs(l1.value) <= 3.0 * l1.std_error;
  std::string detail = "L_1 = " + fmt("%.2e", l1.value) + " +- " + fmt("%.1e", l1.std_error);
  int inside = 0;
  const double log2 = std::log(2.0);
  for (int n : {100, 400}) {
    for (double eps : {0.05, 0.1}) {
      const FiberDeviation f = fiber_deviation_measure(a, s, n, eps, 2000, 405);
      // (1/n) log |A^(n)| = (2K - n) log 2 / n with K ~ Binomial(n, 1/2)
      double exact = 0.0;
      for (int k = 0; k <= n; ++k) {
        const double v = (2.0 * k - n) * log2 / n;
        if (std::abs(v - f.reference) > eps) {
          exact += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * log2);
        }
      }
      const bool ok = exact >= f.measure.lower && exact <= f.measure.upper;
      inside += ok;
      pass = pass && ok;
    }
  }
  return {pass, detail + "; binomial tail inside the Wilson interval for " + std::to_string(inside) + "/4 (n, eps)"};
}

// 5. Convergence rates --------------------------------------------------------------

Outcome convergence_rates() {
  const BaseSystem s = BaseSystem::golden_rotation();
  const Signature tau(2, {1});
  Matrix g(2, 2);
  g << 2.0, 1.0, 0.0, 0.5;
  std::vector<std::int64_t> scales;
  for (std::int64_t n = 8; n <= 256; n += 8) scales.push_back(n);
  scales.push_back(512);
  const ConvergenceReport c = convergence_rate(constant_cocycle(g), s, s.sample_phases(1, 1)[0], tau, scales);
  const double bound_c = std::log(0.25) + 0.1;
  const bool const_ok = c.defined && c.slopes[0] <= bound_c;

  const Cocycle a = schrodinger_cocycle(0.0, 3.0);
  const SpectrumEstimate est = estimate_spectrum(a, s, 4096, 200, 505);
  const double gap = est.values[0] - est.values[1];
  std::vector<std::int64_t> n_list;
  for (std::int64_t n = 16; n <= 2048; n += 16) n_list.push_back(n);
  n_list.push_back(4096);
  const auto phases = s.sample_phases(200, 506);
  const auto slopes = parallel_map<double>(phases.size(), resolve_threads(0), [&](std::size_t i) {
    const ConvergenceReport r = convergence_rate(a, s, phases[i], tau, n_list);
    return r.defined ? r.slopes[0] : INFINITY;
  });
  const double bound_s = -gap + 0.15;
  const auto good = std::count_if(slopes.begin(), slopes.end(), [&](double v) { return v <= bound_s; });
  std::vector<double> sorted = slopes;
  std::sort(sorted.begin(), sorted.end());
  const bool ok = const_ok && good >= 160;
  return {ok, "constant slope " + fmt("%.4f", c.slopes[0]) + " (bound " + fmt("%.4f", bound_c) + "); schrodinger " +
                  std::to_string(good) + "/200 phases with slope <= " + fmt("%.4f", bound_s) + " (median slope " +
                  fmt("%.4f", sorted[100]) + ", need 160)"};
}

// 6. Invariance ----------------------------------------------------------------------

Outcome invariance() {
  const BaseSystem s = BaseSystem::golden_rotation();
  const Cocycle a = schrodinger_cocycle(0.0, 3.0);
  const Signature tau(2, {1});
  const auto phases = s.sample_phases(200, 606);
  struct Pair {
    bool filt = false;
    bool dec = false;
  };
  const auto res = parallel_map<Pair>(phases.size(), resolve_threads(0), [&](std::size_t i) {
    Pair p;
    auto below = [&](InvariantObject o) {
      try {
        const InvarianceReport r = invariance_residual(a, s, phases[i], 1024, tau, o);
        if (!r.defined) return false;
        for (double d : r.residuals)
          if (!(d < 1e-3)) return false;
        return true;
      } catch (const Error&) {
        return false;
      }
    };
    p.filt = below(InvariantObject::filtration);
    p.dec = below(InvariantObject::decomposition);
    return p;
  });
  const auto nf = std::count_if(res.begin(), res.end(), [](const Pair& p) { return p.filt; });
  const auto nd = std::count_if(res.begin(), res.end(), [](const Pair& p) { return p.dec; });

  const Cocycle d = constant_cocycle(Eigen::Vector4d(5.0, 2.0, 0.5, 0.1).asDiagonal().toDenseMatrix());
  double worst = 0.0;
  bool exact = true;
  for (const Phase& x : s.sample_phases(10, 607)) {
    for (auto o : {InvariantObject::filtration, InvariantObject::decomposition}) {
      const InvarianceReport r = invariance_residual(d, s, x, 1024, Signature(4, {1, 2, 3}), o);
      exact = exact && r.defined;
      for (double v : r.residuals) {
        worst = std::max(worst, v);
        exact = exact && v <= 1e-10;
      }
    }
  }
  return {nf >= 180 && nd >= 180 && exact,
          "schrodinger residuals < 1e-3 on " + std::to_string(nf) + "/200 (filtration), " + std::to_string(nd) +
              "/200 (decomposition), need 180; constant diagonal max " + fmt("%.1e", worst) + " (tol 1e-10)"};
}

// 7. Continuity exponent -----------------------------------------------------------------

Outcome continuity_exponent() {
  const BaseSystem s = BaseSystem::golden_rotation();
  auto triangular = [](double h) {
    Matrix g(2, 2);
    g << 2.0, h, 0.0, 0.5;
    return constant_cocycle(g);
  };
  std::vector<double> hs;
  for (int i = 0; i <= 6; ++i) hs.push_back(std::pow(10.0, -1.0 - 0.5 * i));
  ContinuityOptions o;
  o.n = 256;
  o.samples = 8;
  o.seed = 707;
  o.tau = Signature(2, {1});
  o.target = ContinuityTarget::decomposition;
  const auto recs = continuity_experiment(triangular(0.0), triangular, hs, s, o);
  const ModulusFit fit = modulus_fit(recs);
  // E_2 of [[2, h], [0, 1/2]] is spanned by (h, -3/2): tilt angle atan(h / 1.5)
  double worst_oracle = 0.0;
  std::vector<ContinuityRecord> oracle_recs;
  for (const auto& r : recs) {
    const double exact = std::sin(std::atan(r.h / 1.5));
    worst_oracle = std::max(worst_oracle, std::abs(r.mean - exact) / exact);
    ContinuityRecord e;
    e.h = r.h;
    e.mean = exact;
    oracle_recs.push_back(e);
  }
  const double alpha_oracle = modulus_fit(oracle_recs).alpha;
  const bool const_ok = fit.defined && fit.alpha >= 0.85 && fit.alpha <= 1.15 && worst_oracle <= 1e-6;

  const Cocycle a = schrodinger_cocycle(0.0, 3.0);
  auto shift = [](double h) { return schrodinger_cocycle(h, 3.0); };
  ContinuityOptions q;
  q.n = 512;
  q.samples = 200;
  q.seed = 708;
  q.threads = resolve_threads(0);
  q.tau = Signature(2, {1});
  q.target = ContinuityTarget::decomposition;
  const auto srecs = continuity_experiment(a, shift, hs, s, q);
  bool monotone = true;
  for (std::size_t i = 1; i < srecs.size(); ++i) monotone = monotone && srecs[i].mean <= srecs[i - 1].mean;
  const ModulusFit sfit = modulus_fit(srecs);
  const bool ok = const_ok && monotone && sfit.defined && sfit.alpha > 0.0;
  return {ok, "constant family alpha " + fmt("%.4f", fit.alpha) + " (oracle " + fmt("%.4f", alpha_oracle) +
                  ", max rel. error vs oracle " + fmt("%.1e", worst_oracle) + "); schrodinger mean distance " +
                  (monotone ? "nonincreasing" : "NOT monotone") + " in h, alpha " + fmt("%.4f", sfit.alpha)};
}

// 8. Grassmann geometry --------------------------------------------------------------------

Flag flag_from(const Matrix& q, const Signature& tau) {
  std::vector<Subspace> comps;
  for (int t : tau.dims()) comps.emplace_back(Matrix(q.leftCols(t)));
  return Flag(tau, comps);
}

Outcome grassmann_suite() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int fails = 0, guarded = 0, rejected = 0;
  double worst_inv = 0.0, worst_lip = 0.0, smallest_sv = INFINITY;
  for (int c = 0; c < 100; ++c) {
    const int m = 3 + c % 4;
    std::vector<int> dims;
    for (int t = 1; t < m; ++t)
      if (unit(rng) < 0.6 || dims.empty()) dims.push_back(t);
    const Signature tau(m, dims);
    const Matrix q = orthogonal(m, rng);
    const Flag f = flag_from(q, tau);

    worst_inv = std::max(worst_inv, flag_distance(complement_flag(complement_flag(f)), f));

    const Matrix q2 = Eigen::HouseholderQR<Matrix>(q + 0.3 * unit(rng) * gaussian(m, m, rng)).householderQ();
    const Flag g = flag_from(q2, tau);
    const Signature coarse(m, {dims.front()});
    worst_lip = std::max(worst_lip, flag_distance(project_flag(f, coarse), project_flag(g, coarse)) - flag_distance(f, g));

    // A partner flag whose complement is tilted out of F by a controlled angle.
    const double phi = std::pow(10.0, -10.0 * unit(rng));
    Matrix r = Matrix::Identity(m, m);
    const double t = M_PI / 2 - phi;
    r(0, 0) = std::cos(t);
    r(m - 1, 0) = std::sin(t);
    r(0, m - 1) = -std::sin(t);
    r(m - 1, m - 1) = std::cos(t);
    const Flag partner = complement_flag(flag_from(q * r, tau));
    const double theta = transversality(f, partner);
    try {
      const Decomposition d = intersect(f, partner, 1e-6);
      ++guarded;
      const double sv = d.stacked_min_singular_value();
      smallest_sv = std::min(smallest_sv, sv);
      if (theta < 1e-6 || sv < 1e-12) ++fails;
      // every vector splits into components that sum back to it
      Matrix stacked(m, m);
      int col = 0;
      for (const auto& e : d.components()) {
        stacked.middleCols(col, e.dim()) = e.basis();
        col += e.dim();
      }
      const Vector v = gaussian(m, 1, rng);
      const Vector coeff = stacked.fullPivLu().solve(v);
      if ((stacked * coeff - v).norm() > 1e-12 * v.norm() / sv) ++fails;
    } catch (const NonTransversal&) {
      ++rejected;
      if (theta >= 1e-6) ++fails;
    }
  }
  const bool ok = fails == 0 && worst_inv <= 1e-12 && worst_lip <= 1e-15;
  return {ok, "involution " + fmt("%.1e", worst_inv) + ", projection excess " + fmt("%.1e", worst_lip) + ", " +
                  std::to_string(guarded) + " intersections (min stacked sv " + fmt("%.1e", smallest_sv) + "), " +
                  std::to_string(rejected) + " rejected below theta 1e-6"};
}

// 9. Replay determinism --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome replay() {
  const fs::path root = fs::temp_directory_path() / "oslab_acceptance_replay";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cfg = std::string(OSLAB_SOURCE_DIR) + "/configs/golden_schrodinger.json";
  std::vector<fs::path> dirs;
  int bad_exit = 0;
  for (const char* run : {"a1", "b1", "a8", "b8"}) {
    const fs::path d = root / run;
    const std::string threads = run[1] == '1' ? "1" : "8";
    const std::string cmd = std::string("\"") + OSLAB_CLI + "\" run --config \"" + cfg + "\" --out-dir \"" +
                            d.string() + "\" --threads " + threads + " 2>/dev/null";
    bad_exit += std::system(cmd.c_str()) != 0;
    dirs.push_back(d);
  }
  int files = 0, diffs = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    ++files;
    const std::string ref = slurp(entry.path());
    for (std::size_t k = 1; k < dirs.size(); ++k) diffs += slurp(dirs[k] / name) != ref;
  }
  fs::remove_all(root);
  return {bad_exit == 0 && diffs == 0 && files >= 5,
          std::to_string(files) + " output files byte-identical across 2 runs x {1, 8} workers (" +
              std::to_string(diffs) + " differences)"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"exterior-power identities", 5, exterior_identities},
      {"avalanche principle", 30, avalanche_principle},
      {"constant-cocycle oracle", 60, constant_oracle},
      {"random diagonal cocycle", 60, random_diagonal},
      {"convergence rate", 300, convergence_rates},
      {"invariance", 300, invariance},
      {"continuity exponent", 600, continuity_exponent},
      {"grassmann geometry", 5, grassmann_suite},
      {"replay determinism", 600, replay},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= criteria[i].budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("AC%zu %s  %s: %s [%.2f s, budget %.0f s%s]\n", i + 1, pass ? "PASS" : "FAIL", criteria[i].name,
                o.detail.c_str(), secs, criteria[i].budget_s, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
