#include "oslab/parallel.hpp"

#include "oslab/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace oslab {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OSL_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return 1;
}

double pairwise_sum(const double* data, std::size_t count) {
  if (count == 0) return 0.0;
  if (count <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += data[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

MeanAndError mean_and_error(const std::vector<double>& values) {
  std::vector<double> finite;
  finite.reserve(values.size());
  for (double v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  MeanAndError out;
  out.count = finite.size();
  if (finite.empty()) return out;
  out.mean = pairwise_sum(finite.data(), finite.size()) / static_cast<double>(finite.size());
  if (finite.size() > 1) {
    std::vector<double> sq(finite.size());
    for (std::size_t i = 0; i < finite.size(); ++i) sq[i] = (finite[i] - out.mean) * (finite[i] - out.mean);
    const double var = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(finite.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(finite.size()));
  }
  return out;
}

WilsonInterval wilson_interval(std::size_t hits, std::size_t total, double z) {
  WilsonInterval w;
  if (total == 0) {
    w.upper = 1.0;
    return w;
  }
  const double n = static_cast<double>(total);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double radius = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  w.estimate = p;
  w.lower = std::max(0.0, centre - radius);
  w.upper = std::min(1.0, centre + radius);
  return w;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("least_squares: need at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = pairwise_sum(x.data(), x.size()) / n;
  const double my = pairwise_sum(y.data(), y.size()) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("least_squares: abscissae are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.residuals.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) fit.residuals[i] = y[i] - (fit.intercept + fit.slope * x[i]);
  return fit;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(values.size() - 1, lo + 1);
  const double t = pos - static_cast<double>(lo);
  return values[lo] + t * (values[hi] - values[lo]);
}

}  // namespace oslab
