#include "oslab/cocycle.hpp"

#include "oslab/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace oslab {

Cocycle::Cocycle(int dim, Generator generator, double sup_norm_bound, std::string label)
    : dim_(dim), generator_(std::move(generator)), sup_norm_bound_(sup_norm_bound), label_(std::move(label)) {
  if (dim_ < 1) throw InvalidArgument("Cocycle: dimension must be positive");
  if (!generator_) throw InvalidArgument("Cocycle: empty generator");
  if (!(sup_norm_bound_ >= 0.0) || !std::isfinite(sup_norm_bound_)) {
    throw InvalidArgument("Cocycle: sup-norm bound must be finite and non-negative");
  }
}

Matrix Cocycle::operator()(const BaseSystem& s, const Phase& x) const {
  Matrix g = generator_(s, x);
  if (g.rows() != dim_ || g.cols() != dim_) {
    throw DimensionMismatch("Cocycle '" + label_ + "': generator returned a matrix of the wrong size");
  }
  require_finite(g, "Cocycle");
  return g;
}

IterateResult iterate(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n) {
  if (n < 1) throw InvalidArgument("iterate: n must be at least 1");
  IterateResult out{ScaledMatrix::identity(a.dim()), n, x, -1};
  Phase y = x;
  for (std::int64_t j = 0; j < n; ++j) {
    out.value.left_multiply(a(s, y));
    y = s.step(y, 1);
  }
  return out;
}

std::vector<ScaledMatrix> iterate_scales(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                         const std::vector<std::int64_t>& scales) {
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] < 1 || (i > 0 && scales[i] <= scales[i - 1])) {
      throw InvalidArgument("iterate_scales: scales must be positive and strictly increasing");
    }
  }
  std::vector<ScaledMatrix> out;
  out.reserve(scales.size());
  ScaledMatrix acc = ScaledMatrix::identity(a.dim());
  Phase y = x;
  std::int64_t done = 0;
  for (std::int64_t target : scales) {
    for (; done < target; ++done) {
      acc.left_multiply(a(s, y));
      y = s.step(y, 1);
    }
    out.push_back(acc);
  }
  return out;
}

IterateResult adjoint_iterate(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n) {
  if (n < 1) throw InvalidArgument("adjoint_iterate: n must be at least 1");
  IterateResult fwd = iterate(a, s, s.step(x, -n), n);
  return IterateResult{fwd.value.transposed(), n, x, -1};
}

IterateResult backward_iterate(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n) {
  if (n < 1) throw InvalidArgument("backward_iterate: n must be at least 1");
  constexpr double kCutoff = 1e-13;
  const IterateResult fwd = iterate(a, s, s.step(x, -n), n);
  IterateResult out{ScaledMatrix(), n, x, 0};
  if (fwd.value.is_zero()) {
    out.value = ScaledMatrix(Matrix::Zero(a.dim(), a.dim()), 0.0);
    return out;
  }
  const Matrix& f = fwd.value.factor();
  const Vector sv = singular_values(f);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > kCutoff * sv(0)) ++out.rank;
  }
  out.value = ScaledMatrix(pseudo_inverse(f, kCutoff), -fwd.value.log_scale());
  return out;
}

Cocycle exterior_cocycle(const Cocycle& a, int k) {
  const int m = a.dim();
  if (k < 1 || k > m) throw InvalidArgument("exterior_cocycle: k must lie in [1, m]");
  if (k == 1) return a;
  const auto dim = static_cast<int>(binomial(m, k));
  Generator gen = [a, k](const BaseSystem& s, const Phase& x) { return exterior_power(a(s, x), k); };
  return Cocycle(dim, std::move(gen), std::pow(a.sup_norm_bound(), k),
                 "wedge_" + std::to_string(k) + "(" + a.label() + ")");
}

Cocycle adjoint_cocycle(const Cocycle& a, const BaseSystem& s) {
  const BaseSystem forward = s;
  Generator gen = [a, forward](const BaseSystem&, const Phase& x) -> Matrix {
    return a(forward, forward.step(x, -1)).transpose();
  };
  return Cocycle(a.dim(), std::move(gen), a.sup_norm_bound(), "adjoint(" + a.label() + ")");
}

double check_sup_bound(const Cocycle& a, const BaseSystem& s, const std::vector<Phase>& phases) {
  double worst = 0.0;
  for (const auto& x : phases) worst = std::max(worst, operator_norm(a(s, x)));
  if (worst > a.sup_norm_bound() * (1.0 + 1e-12) + 1e-300) {
    throw InvalidArgument("cocycle '" + a.label() + "' exceeds its declared sup-norm bound");
  }
  return worst;
}

double ExteriorIterates::log_norm(std::size_t i, int k) const {
  if (k == 0) return 0.0;
  return powers[i][static_cast<std::size_t>(k - 1)].log_norm();
}

ExteriorIterates exterior_iterates(const Cocycle& a, const BaseSystem& s, const Phase& x,
                                   const std::vector<std::int64_t>& scales, int kmax) {
  const int m = a.dim();
  if (kmax < 1 || kmax > m) throw InvalidArgument("exterior_iterates: kmax must lie in [1, m]");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] < 1 || (i > 0 && scales[i] <= scales[i - 1])) {
      throw InvalidArgument("exterior_iterates: scales must be positive and strictly increasing");
    }
  }
  std::vector<ScaledMatrix> acc;
  acc.reserve(static_cast<std::size_t>(kmax));
  for (int k = 1; k <= kmax; ++k) acc.push_back(ScaledMatrix::identity(static_cast<int>(binomial(m, k))));

  ExteriorIterates out;
  out.scales = scales;
  out.powers.reserve(scales.size());
  Phase y = x;
  std::int64_t done = 0;
  for (std::int64_t target : scales) {
    for (; done < target; ++done) {
      const Matrix g = a(s, y);
      for (int k = 1; k <= kmax; ++k) {
        auto& p = acc[static_cast<std::size_t>(k - 1)];
        if (k == 1) {
          p.left_multiply(g);
        } else if (k == m) {
          p.left_multiply(Matrix::Constant(1, 1, g.determinant()));
        } else {
          p.left_multiply(exterior_power(g, k));
        }
      }
      y = s.step(y, 1);
    }
    out.powers.push_back(acc);
  }
  return out;
}

// Catalog -------------------------------------------------------------------

Cocycle constant_cocycle(const Matrix& g, std::string label) {
  require_square(g, "constant_cocycle");
  require_finite(g, "constant_cocycle");
  const Matrix copy = g;
  return Cocycle(static_cast<int>(g.rows()), [copy](const BaseSystem&, const Phase&) { return copy; },
                 operator_norm(g), std::move(label));
}

Cocycle schrodinger_cocycle(double energy, double coupling) {
  if (!std::isfinite(energy) || !std::isfinite(coupling)) {
    throw NonFinite("schrodinger: non-finite energy or coupling");
  }
  Generator gen = [energy, coupling](const BaseSystem& s, const Phase& x) {
    const double t = s.coordinate(x);
    Matrix g(2, 2);
    g << energy - 2.0 * coupling * std::cos(2.0 * std::numbers::pi * t), -1.0, 1.0, 0.0;
    return g;
  };
  std::ostringstream label;
  label << "schrodinger(E=" << energy << ",lambda=" << coupling << ")";
  return Cocycle(2, std::move(gen), std::abs(energy) + 2.0 * std::abs(coupling) + 1.0, label.str());
}

Cocycle diagonal_random_cocycle(const std::vector<std::vector<double>>& values) {
  if (values.empty()) throw InvalidArgument("diagonal_random: need at least one coordinate");
  int alphabet = 1;
  double bound = 0.0;
  for (const auto& v : values) {
    if (v.empty()) throw InvalidArgument("diagonal_random: empty value list");
    for (double a : v) {
      if (!std::isfinite(a)) throw NonFinite("diagonal_random: non-finite value");
      bound = std::max(bound, std::abs(a));
    }
    alphabet *= static_cast<int>(v.size());
  }
  Generator gen = [values, alphabet](const BaseSystem& s, const Phase& x) {
    if (s.alphabet_size() != alphabet) {
      throw InvalidArgument("diagonal_random: base alphabet size must be " + std::to_string(alphabet));
    }
    int code = s.symbol(x);
    Matrix g = Matrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      const int radix = static_cast<int>(values[i].size());
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = values[i][static_cast<std::size_t>(code % radix)];
      code /= radix;
    }
    return g;
  };
  return Cocycle(static_cast<int>(values.size()), std::move(gen), bound, "diagonal_random");
}

Cocycle random_glm_cocycle(int m, int count, std::uint64_t seed, double scale) {
  if (m < 1 || count < 1) throw InvalidArgument("random_glm: m and count must be positive");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<Matrix> mats;
  mats.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    Matrix g(m, m);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(gen);
    mats.push_back(std::move(g));
  }
  Cocycle table = table_cocycle(mats, {}, true);
  return Cocycle(m, [table](const BaseSystem& s, const Phase& x) { return table(s, x); }, table.sup_norm_bound(),
                 "random_glm");
}

Cocycle table_cocycle(const std::vector<Matrix>& matrices, const std::vector<double>& breakpoints, bool symbolic) {
  if (matrices.empty()) throw InvalidArgument("custom_table: no matrices");
  const auto m = matrices.front().rows();
  double bound = 0.0;
  for (const auto& g : matrices) {
    if (g.rows() != m || g.cols() != m) throw DimensionMismatch("custom_table: matrices differ in size");
    require_finite(g, "custom_table");
    bound = std::max(bound, operator_norm(g));
  }
  std::vector<double> cuts = breakpoints;
  if (!symbolic) {
    if (cuts.empty()) {
      for (std::size_t i = 1; i < matrices.size(); ++i) {
        cuts.push_back(static_cast<double>(i) / static_cast<double>(matrices.size()));
      }
    }
    if (cuts.size() + 1 != matrices.size()) {
      throw InvalidArgument("custom_table: need one breakpoint fewer than matrices");
    }
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      if (!(cuts[i] > 0.0 && cuts[i] < 1.0) || (i > 0 && cuts[i] <= cuts[i - 1])) {
        throw InvalidArgument("custom_table: breakpoints must increase inside (0, 1)");
      }
    }
  }
  Generator gen = [matrices, cuts, symbolic](const BaseSystem& s, const Phase& x) -> Matrix {
    if (symbolic) {
      const int c = s.symbol(x);
      if (c >= static_cast<int>(matrices.size())) {
        throw InvalidArgument("custom_table: symbol exceeds the number of matrices");
      }
      return matrices[static_cast<std::size_t>(c)];
    }
    const double t = s.coordinate(x);
    const auto idx = std::upper_bound(cuts.begin(), cuts.end(), t) - cuts.begin();
    return matrices[static_cast<std::size_t>(idx)];
  };
  return Cocycle(static_cast<int>(m), std::move(gen), bound, "custom_table");
}

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {"constant", "diagonal_random", "schrodinger", "random_glm",
                                                 "custom_table"};
  return names;
}

namespace {

using nlohmann::json;

const json& need(const json& p, const char* key, const std::string& where) {
  if (!p.is_object() || !p.contains(key)) {
    throw InvalidArgument(where + "." + key + ": missing required parameter");
  }
  return p.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw InvalidArgument(path + ": expected a number");
  return v.get<double>();
}

Matrix matrix_from_json(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw InvalidArgument(path + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  if (!v[0].is_array()) throw InvalidArgument(path + ": expected an array of rows");
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidArgument(path + "[" + std::to_string(i) + "]: ragged row");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      g(i, j) = number(row[static_cast<std::size_t>(j)], path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  if (rows != cols) throw InvalidArgument(path + ": matrix must be square");
  return g;
}

}  // namespace

std::vector<Matrix> parse_matrix_csv(const std::string& text) {
  std::vector<Matrix> out;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> entries;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        entries.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidArgument("csv line " + std::to_string(lineno) + ": cannot parse '" + cell + "'");
      }
    }
    const auto m = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(entries.size()))));
    if (m * m != static_cast<Eigen::Index>(entries.size())) {
      throw InvalidArgument("csv line " + std::to_string(lineno) + ": entry count is not a square");
    }
    Matrix g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) g(i, j) = entries[static_cast<std::size_t>(i * m + j)];
    }
    out.push_back(std::move(g));
  }
  return out;
}

Cocycle catalog(const std::string& name, const nlohmann::json& params) {
  const std::string where = "cocycle.params";
  if (name == "constant") {
    if (params.contains("diag")) {
      const auto& d = params.at("diag");
      if (!d.is_array() || d.empty()) throw InvalidArgument(where + ".diag: expected a non-empty array");
      Vector v(static_cast<Eigen::Index>(d.size()));
      for (std::size_t i = 0; i < d.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(d[i], where + ".diag[" + std::to_string(i) + "]");
      return constant_cocycle(v.asDiagonal(), "constant");
    }
    return constant_cocycle(matrix_from_json(need(params, "matrix", where), where + ".matrix"), "constant");
  }
  if (name == "schrodinger") {
    const double e = params.contains("E") ? number(params.at("E"), where + ".E") : 0.0;
    const double lambda = number(need(params, "lambda", where), where + ".lambda");
    return schrodinger_cocycle(e, lambda);
  }
  if (name == "diagonal_random") {
    const auto& v = need(params, "values", where);
    if (!v.is_array() || v.empty()) throw InvalidArgument(where + ".values: expected a list of value lists");
    std::vector<std::vector<double>> values;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string path = where + ".values[" + std::to_string(i) + "]";
      if (!v[i].is_array() || v[i].empty()) throw InvalidArgument(path + ": expected a non-empty list");
      std::vector<double> row;
      for (std::size_t j = 0; j < v[i].size(); ++j) row.push_back(number(v[i][j], path + "[" + std::to_string(j) + "]"));
      values.push_back(std::move(row));
    }
    return diagonal_random_cocycle(values);
  }
  if (name == "random_glm") {
    const int m = static_cast<int>(number(need(params, "m", where), where + ".m"));
    const int count = static_cast<int>(number(need(params, "count", where), where + ".count"));
    const auto seed = params.contains("seed") ? params.at("seed").get<std::uint64_t>() : 0ULL;
    const double scale = params.contains("scale") ? number(params.at("scale"), where + ".scale") : 1.0;
    return random_glm_cocycle(m, count, seed, scale);
  }
  if (name == "custom_table") {
    std::vector<Matrix> mats;
    if (params.contains("csv")) {
      if (!params.at("csv").is_string()) throw InvalidArgument(where + ".csv: expected a string");
      mats = parse_matrix_csv(params.at("csv").get<std::string>());
    } else {
      const auto& list = need(params, "matrices", where);
      if (!list.is_array()) throw InvalidArgument(where + ".matrices: expected a list of matrices");
      for (std::size_t i = 0; i < list.size(); ++i) {
        mats.push_back(matrix_from_json(list[i], where + ".matrices[" + std::to_string(i) + "]"));
      }
    }
    const std::string partition = params.value("partition", std::string("symbolic"));
    if (partition != "symbolic" && partition != "torus") {
      throw InvalidArgument(where + ".partition: expected 'symbolic' or 'torus'");
    }
    std::vector<double> cuts;
    if (params.contains("breakpoints")) {
      for (const auto& b : params.at("breakpoints")) cuts.push_back(number(b, where + ".breakpoints"));
    }
    return table_cocycle(mats, cuts, partition == "symbolic");
  }
  throw InvalidArgument("cocycle.name: unknown catalog cocycle '" + name + "'");
}

}  // namespace oslab
