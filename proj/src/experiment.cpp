#include "oslab/experiment.hpp"

#include "oslab/errors.hpp"
#include "oslab/lyapunov.hpp"
#include "oslab/oseledets.hpp"
#include "oslab/parallel.hpp"
#include "oslab/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace oslab {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Schema helpers ------------------------------------------------------------

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void only_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected a table/object");
  for (const auto& item : obj.items()) {
    if (allowed.count(item.key()) == 0) throw ConfigError(join(path, item.key()), "unknown field");
  }
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

std::int64_t as_integer(const json& v, const std::string& path, std::int64_t min_value) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < min_value) throw ConfigError(path, "must be at least " + std::to_string(min_value));
  return x;
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

const json& array_at(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  return v;
}

std::vector<std::int64_t> increasing_scales(const json& v, const std::string& path) {
  std::vector<std::int64_t> out;
  const json& arr = array_at(v, path);
  if (arr.empty()) throw ConfigError(path, "must not be empty");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(as_integer(arr[i], at(path, i), 1));
    if (i > 0 && out[i] <= out[i - 1]) throw ConfigError(at(path, i), "scales must be strictly increasing");
  }
  return out;
}

std::vector<int> signature_dims(const json& v, const std::string& path) {
  std::vector<int> out;
  const json& arr = array_at(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(static_cast<int>(as_integer(arr[i], at(path, i), 1)));
    if (i > 0 && out[i] <= out[i - 1]) throw ConfigError(at(path, i), "signature must be strictly increasing");
  }
  return out;
}

// Output helpers ------------------------------------------------------------

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json jvec(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(jnum(x));
  return out;
}

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  bool empty() const { return rows_.empty(); }

  std::string csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns_.size(); ++c) out += (c ? "," : "") + columns_[c];
    out += "\n";
    for (const auto& r : rows_) {
      for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + r[c];
      out += "\n";
    }
    return out;
  }

  std::string as_json() const {
    json arr = json::array();
    for (const auto& r : rows_) {
      json obj = json::object();
      for (std::size_t c = 0; c < columns_.size(); ++c) {
        const std::string& cell = r[c];
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end != cell.c_str() && *end == '\0') {
          obj[columns_[c]] = jnum(v);
        } else {
          obj[columns_[c]] = cell;
        }
      }
      arr.push_back(obj);
    }
    return arr.dump(1) + "\n";
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

class Writer {
 public:
  Writer(fs::path dir, OutputFormat format) : dir_(std::move(dir)), format_(format) {}

  void text(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot open " + p.string() + " for writing");
    f << content;
    f.close();
    if (!f) throw std::ios_base::failure("failed writing " + p.string());
    written_.push_back(name);
  }

  void table(const std::string& stem, const Table& t) {
    if (format_ == OutputFormat::json) {
      text(stem + ".json", t.as_json());
    } else {
      text(stem + ".csv", t.csv());
    }
  }

  void plot(const std::string& name, const std::vector<std::pair<double, double>>& pts) {
    std::string body;
    for (const auto& [x, y] : pts) body += num(x) + " " + num(y) + "\n";
    text(name, body);
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  fs::path dir_;
  OutputFormat format_;
  std::vector<std::string> written_;
};

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::vector<std::string>& pipeline_names() {
  static const std::vector<std::string> names{"spectrum", "oseledets", "continuity", "deviation", "exceptional"};
  return names;
}

bool ExperimentConfig::has(const std::string& pipeline) const {
  return std::find(pipelines.begin(), pipelines.end(), pipeline) != pipelines.end();
}

// Parsing ---------------------------------------------------------------------

ExperimentConfig parse_config(const json& doc) {
  only_keys(doc, "", {"name", "description", "seed", "threads", "samples", "scales", "base", "cocycle", "tau",
                      "pipelines", "oseledets", "continuity", "deviation", "exceptional", "output"});
  ExperimentConfig cfg;
  cfg.raw = doc;
  if (doc.contains("seed")) cfg.seed = static_cast<std::uint64_t>(as_integer(doc["seed"], "seed", 0));
  if (doc.contains("threads")) cfg.threads = static_cast<int>(as_integer(doc["threads"], "threads", 1));
  if (doc.contains("samples")) cfg.samples = static_cast<std::size_t>(as_integer(doc["samples"], "samples", 1));
  if (!doc.contains("scales")) throw ConfigError("scales", "required field missing");
  cfg.scales = increasing_scales(doc["scales"], "scales");

  if (!doc.contains("base")) throw ConfigError("base", "required field missing");
  cfg.base = doc["base"];
  only_keys(cfg.base, "base", {"kind", "alpha", "weights", "matrix", "window"});
  if (!cfg.base.contains("kind")) throw ConfigError("base.kind", "required field missing");
  as_string(cfg.base["kind"], "base.kind");

  if (!doc.contains("cocycle")) throw ConfigError("cocycle", "required field missing");
  const json& coc = doc["cocycle"];
  only_keys(coc, "cocycle", {"name", "params"});
  if (!coc.contains("name")) throw ConfigError("cocycle.name", "required field missing");
  cfg.cocycle = as_string(coc["name"], "cocycle.name");
  const auto& names = catalog_names();
  if (std::find(names.begin(), names.end(), cfg.cocycle) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("cocycle.name", "unknown catalog name '" + cfg.cocycle + "' (known: " + list + ")");
  }
  cfg.cocycle_params = coc.contains("params") ? coc["params"] : json::object();
  if (!cfg.cocycle_params.is_object()) throw ConfigError("cocycle.params", "expected a table/object");

  if (doc.contains("tau")) cfg.tau = signature_dims(doc["tau"], "tau");

  if (doc.contains("pipelines")) {
    const json& arr = array_at(doc["pipelines"], "pipelines");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = as_string(arr[i], at("pipelines", i));
      const auto& known = pipeline_names();
      if (std::find(known.begin(), known.end(), p) == known.end()) {
        throw ConfigError(at("pipelines", i), "unknown pipeline '" + p + "'");
      }
      if (!cfg.has(p)) cfg.pipelines.push_back(p);
    }
  } else {
    cfg.pipelines = {"spectrum"};
  }

  if (doc.contains("oseledets")) {
    const json& o = doc["oseledets"];
    only_keys(o, "oseledets", {"phases", "n", "convergence_scales", "n0", "avalanche_eps"});
    if (o.contains("phases")) cfg.oseledets.phases = static_cast<std::size_t>(as_integer(o["phases"], "oseledets.phases", 1));
    if (o.contains("n")) cfg.oseledets.n = as_integer(o["n"], "oseledets.n", 2);
    if (o.contains("convergence_scales")) {
      cfg.oseledets.convergence_scales = increasing_scales(o["convergence_scales"], "oseledets.convergence_scales");
    }
    if (o.contains("n0")) cfg.oseledets.n0 = as_integer(o["n0"], "oseledets.n0", 1);
    if (o.contains("avalanche_eps")) {
      cfg.oseledets.avalanche_eps = as_number(o["avalanche_eps"], "oseledets.avalanche_eps");
      if (!(cfg.oseledets.avalanche_eps > 0.0)) throw ConfigError("oseledets.avalanche_eps", "must be positive");
    }
  }

  if (doc.contains("continuity")) {
    const json& c = doc["continuity"];
    only_keys(c, "continuity", {"family", "h", "n", "samples", "target", "alpha_trial", "entry", "tau_b"});
    if (c.contains("family")) {
      cfg.continuity.family = as_string(c["family"], "continuity.family");
      if (cfg.continuity.family != "energy_shift" && cfg.continuity.family != "entry") {
        throw ConfigError("continuity.family", "expected 'energy_shift' or 'entry'");
      }
    }
    if (c.contains("h")) {
      const json& arr = array_at(c["h"], "continuity.h");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const double h = as_number(arr[i], at("continuity.h", i));
        if (h < 0.0) throw ConfigError(at("continuity.h", i), "must be nonnegative");
        if (i > 0 && !(h < cfg.continuity.h.back())) throw ConfigError(at("continuity.h", i), "h must be strictly decreasing");
        cfg.continuity.h.push_back(h);
      }
    }
    if (c.contains("n")) cfg.continuity.n = as_integer(c["n"], "continuity.n", 1);
    if (c.contains("samples")) cfg.continuity.samples = static_cast<std::size_t>(as_integer(c["samples"], "continuity.samples", 1));
    if (c.contains("target")) {
      try {
        cfg.continuity.target = parse_continuity_target(as_string(c["target"], "continuity.target"));
      } catch (const InvalidArgument& e) {
        throw ConfigError("continuity.target", e.what());
      }
    }
    if (c.contains("alpha_trial")) cfg.continuity.alpha_trial = as_number(c["alpha_trial"], "continuity.alpha_trial");
    if (c.contains("entry")) {
      const json& e = array_at(c["entry"], "continuity.entry");
      if (e.size() != 2) throw ConfigError("continuity.entry", "expected [row, col]");
      cfg.continuity.row = static_cast<int>(as_integer(e[0], "continuity.entry[0]", 0));
      cfg.continuity.col = static_cast<int>(as_integer(e[1], "continuity.entry[1]", 0));
    }
    if (c.contains("tau_b")) cfg.continuity.tau_b = signature_dims(c["tau_b"], "continuity.tau_b");
  }
  if (cfg.has("continuity") && cfg.continuity.h.empty()) {
    throw ConfigError("continuity.h", "the continuity pipeline needs a non-empty h list");
  }

  if (doc.contains("deviation")) {
    const json& d = doc["deviation"];
    only_keys(d, "deviation", {"eps", "samples"});
    if (d.contains("eps")) {
      cfg.deviation.eps.clear();
      const json& arr = array_at(d["eps"], "deviation.eps");
      if (arr.empty()) throw ConfigError("deviation.eps", "must not be empty");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const double e = as_number(arr[i], at("deviation.eps", i));
        if (e < 0.0) throw ConfigError(at("deviation.eps", i), "must be nonnegative");
        cfg.deviation.eps.push_back(e);
      }
    }
    if (d.contains("samples")) cfg.deviation.samples = static_cast<std::size_t>(as_integer(d["samples"], "deviation.samples", 1));
  }

  if (doc.contains("exceptional")) {
    const json& e = doc["exceptional"];
    only_keys(e, "exceptional", {"n", "samples", "speed_n_max"});
    if (e.contains("n")) cfg.exceptional.n = as_integer(e["n"], "exceptional.n", 1);
    if (e.contains("samples")) cfg.exceptional.samples = static_cast<std::size_t>(as_integer(e["samples"], "exceptional.samples", 1));
    if (e.contains("speed_n_max")) cfg.exceptional.speed_n_max = as_integer(e["speed_n_max"], "exceptional.speed_n_max", 2);
  }

  if (doc.contains("output")) {
    const json& o = doc["output"];
    only_keys(o, "output", {"dir", "plots", "format"});
    if (o.contains("dir")) cfg.output_dir = as_string(o["dir"], "output.dir");
    if (o.contains("plots")) cfg.plots = as_bool(o["plots"], "output.plots");
    if (o.contains("format")) {
      const std::string f = as_string(o["format"], "output.format");
      if (f == "csv") {
        cfg.format = OutputFormat::csv;
      } else if (f == "json") {
        cfg.format = OutputFormat::json;
      } else {
        throw ConfigError("output.format", "expected 'csv' or 'json'");
      }
    }
  }
  return cfg;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

// TOML goes through the Python tomli reader; the result is re-parsed as JSON.
json load_toml(const std::string& path) {
  if (!std::ifstream(path)) throw Error("cannot read config file '" + path + "'");
  const char* py = std::getenv("OSLAB_PYTHON");
  const std::string cmd = std::string(py != nullptr && *py != '\0' ? py : "python3") +
                          " -c 'import json,sys,tomli;json.dump(tomli.load(open(sys.argv[1],\"rb\")),sys.stdout)' " +
                          shell_quote(path) + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw Error("cannot start the TOML reader");
  std::string text;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, got);
  const int status = pclose(pipe);
  if (status != 0) {
    const auto last = text.find_last_not_of('\n');
    const auto line = text.rfind('\n', last == std::string::npos ? 0 : last);
    throw ConfigError("", "malformed TOML: " + (line == std::string::npos ? text : text.substr(line + 1)));
  }
  return json::parse(text);
}

}  // namespace

json load_config_file(const std::string& path) {
  if (fs::path(path).extension() == ".toml") return load_toml(path);
  std::ifstream f(path);
  if (!f) throw Error("cannot read config file '" + path + "'");
  try {
    return json::parse(f, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

BaseSystem build_base(const json& base, const std::string& path) {
  const std::string kind = as_string(base.at("kind"), join(path, "kind"));
  auto numbers = [&](const char* key) {
    const std::string p = join(path, key);
    if (!base.contains(key)) throw ConfigError(p, "required for base kind '" + kind + "'");
    const json& arr = array_at(base[key], p);
    std::vector<double> out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_number(arr[i], at(p, i)));
    return out;
  };
  try {
    if (kind == "golden") return BaseSystem::golden_rotation();
    if (kind == "rotation") {
      if (base.contains("alpha") && base["alpha"].is_number()) {
        return BaseSystem::rotation({as_number(base["alpha"], join(path, "alpha"))});
      }
      return BaseSystem::rotation(numbers("alpha"));
    }
    if (kind == "bernoulli") return BaseSystem::bernoulli(numbers("weights"));
    if (kind == "markov") {
      const std::string p = join(path, "matrix");
      if (!base.contains("matrix")) throw ConfigError(p, "required for base kind 'markov'");
      const json& rows = array_at(base["matrix"], p);
      const auto k = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd m(k, k);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const json& row = array_at(rows[i], at(p, i));
        if (static_cast<Eigen::Index>(row.size()) != k) throw ConfigError(at(p, i), "transition matrix must be square");
        for (std::size_t j = 0; j < row.size(); ++j) {
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = as_number(row[j], at(at(p, i), j));
        }
      }
      std::size_t window = std::size_t{1} << 20;
      if (base.contains("window")) window = static_cast<std::size_t>(as_integer(base["window"], join(path, "window"), 2));
      return BaseSystem::markov(m, window);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(join(path, "kind"), "unknown base kind '" + kind + "' (golden, rotation, bernoulli, markov)");
}

Cocycle build_cocycle(const ExperimentConfig& cfg) {
  try {
    return catalog(cfg.cocycle, cfg.cocycle_params);
  } catch (const Error& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    if (what.rfind("cocycle.params", 0) == 0 && colon != std::string::npos) {
      throw ConfigError(what.substr(0, colon), what.substr(colon + 2));
    }
    throw ConfigError("cocycle.params", what);
  }
}

namespace {

CocycleFamily make_family(const ExperimentConfig& cfg, const Cocycle& a) {
  if (cfg.continuity.family == "energy_shift") {
    if (cfg.cocycle != "schrodinger") {
      throw ConfigError("continuity.family", "energy_shift requires the schrodinger cocycle");
    }
    const double e0 = cfg.cocycle_params.contains("E") ? cfg.cocycle_params["E"].get<double>() : 0.0;
    const double lambda = cfg.cocycle_params["lambda"].get<double>();
    return [e0, lambda](double h) { return schrodinger_cocycle(e0 + h, lambda); };
  }
  const int m = a.dim();
  const int r = cfg.continuity.row;
  const int c = cfg.continuity.col;
  if (r >= m || c >= m) throw ConfigError("continuity.entry", "entry outside the " + std::to_string(m) + "x" + std::to_string(m) + " matrix");
  return [a, m, r, c](double h) {
    const Cocycle base = a;
    return Cocycle(
        m,
        [base, r, c, h](const BaseSystem& s, const Phase& x) {
          Matrix g = base(s, x);
          g(r, c) += h;
          return g;
        },
        a.sup_norm_bound() + std::abs(h), a.label() + "+entry");
  };
}

// Phases touched by the selected pipelines, counted from the sampled phase.
std::int64_t required_span(const ExperimentConfig& cfg) {
  const std::int64_t top = cfg.scales.back();
  std::int64_t span = top;
  if (cfg.has("oseledets")) span = std::max(span, 2 * (cfg.oseledets.n > 0 ? cfg.oseledets.n : top) + 1);
  if (cfg.has("continuity")) span = std::max(span, 2 * (cfg.continuity.n > 0 ? cfg.continuity.n : top) + 1);
  if (cfg.has("exceptional")) {
    const std::int64_t n = cfg.exceptional.n > 0 ? cfg.exceptional.n : cfg.scales.front();
    span = std::max(span, 40 * n);
  }
  return span;
}

}  // namespace

void validate_config(ExperimentConfig& cfg) {
  const BaseSystem s = build_base(cfg.base);
  const Cocycle a = build_cocycle(cfg);
  try {
    const auto phases = s.sample_phases(2, cfg.seed);
    for (const auto& x : phases) a(s, x);
  } catch (const Error& e) {
    throw ConfigError("cocycle", std::string("cocycle '") + cfg.cocycle + "' does not evaluate on base '" +
                                     s.kind_name() + "': " + e.what());
  }
  const int m = a.dim();
  auto check_sig = [&](const std::vector<int>& dims, const std::string& path) {
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (dims[i] >= m) throw ConfigError(at(path, i), "entries must be below the dimension m=" + std::to_string(m));
    }
  };
  if (cfg.tau) check_sig(*cfg.tau, "tau");
  if (cfg.continuity.tau_b) {
    check_sig(*cfg.continuity.tau_b, "continuity.tau_b");
    if (cfg.tau && !refines(Signature(m, *cfg.continuity.tau_b), Signature(m, *cfg.tau))) {
      throw ConfigError("continuity.tau_b", "must refine tau");
    }
  }
  if (cfg.has("continuity")) make_family(cfg, a);
  if ((cfg.has("oseledets") || cfg.has("exceptional")) && m < 2) {
    throw ConfigError("pipelines", "oseledets and exceptional pipelines need dimension at least 2");
  }
  if (cfg.has("oseledets")) {
    const std::int64_t n = cfg.oseledets.n > 0 ? cfg.oseledets.n : cfg.scales.back();
    for (std::size_t i = 0; i < cfg.oseledets.convergence_scales.size(); ++i) {
      if (cfg.oseledets.convergence_scales[i] >= n) {
        throw ConfigError(at("oseledets.convergence_scales", i), "must be below the reference scale " + std::to_string(n));
      }
    }
  }
  if (s.kind() == BaseKind::markov) {
    const std::int64_t span = required_span(cfg);
    const auto window = static_cast<std::int64_t>(s.window_capacity());
    if (span > window) {
      const std::int64_t suggested = std::max<std::int64_t>(1, cfg.scales.back() * window / span);
      cfg.warnings.push_back("scales reach " + std::to_string(span) + " symbols, beyond the Markov window of " +
                             std::to_string(window) + "; paths will be regenerated (slow). Suggested n_max <= " +
                             std::to_string(suggested));
    }
  }
}

// Running ---------------------------------------------------------------------

namespace {

struct Stage {
  std::string status = "skipped";
  double seconds = 0.0;
  json detail = json::object();
};

class StageClock {
 public:
  StageClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

json oseledets_record(const Cocycle& a, const BaseSystem& s, const Phase& x, std::size_t id, std::int64_t n,
                      const Signature& tau, const std::vector<std::int64_t>& conv_scales, double kappa1,
                      const OseledetsSection& o) {
  json rec;
  rec["phase"] = id;
  rec["n"] = n;
  rec["tau"] = tau.dims();
  const PartialDirection dir = finite_direction(a, s, x, n, tau);
  rec["direction_defined"] = dir.defined;
  rec["log_gap"] = jnum(dir.log_gap);
  const PartialFlag filt = oseledets_filtration(a, s, x, n, tau);
  rec["filtration_defined"] = filt.defined;
  try {
    const PartialDecomposition dec = oseledets_decomposition(a, s, x, n, tau);
    rec["decomposition_defined"] = dec.defined;
    rec["transversality"] = dec.defined ? jnum(dec.theta) : json(nullptr);
  } catch (const NonTransversal& e) {
    rec["decomposition_defined"] = false;
    rec["transversality"] = nullptr;
    rec["decomposition_error"] = e.what();
  }
  json residuals = json::object();
  for (auto [name, object] : {std::pair{"filtration", InvariantObject::filtration},
                              std::pair{"decomposition", InvariantObject::decomposition}}) {
    try {
      const InvarianceReport r = invariance_residual(a, s, x, n, tau, object);
      residuals[name] = r.defined ? jvec(r.residuals) : json(nullptr);
    } catch (const NonTransversal&) {
      residuals[name] = nullptr;
    }
  }
  rec["residuals"] = residuals;
  std::vector<std::int64_t> scales = conv_scales;
  scales.push_back(n);
  const ConvergenceReport conv = convergence_rate(a, s, x, tau, scales);
  rec["convergence_slopes"] = conv.defined ? jvec(conv.slopes) : json(nullptr);
  const AlphaSeries alpha = alpha_alignment_series(a, s, x, {n});
  rec["alpha"] = alpha.defined[0] ? jnum(alpha.values[0]) : json(nullptr);

  json sched;
  if (!(kappa1 > 0.0)) {
    sched["error"] = "no gap between L_1 and L_2";
  } else {
    const double eps = o.avalanche_eps > 0.0 ? o.avalanche_eps : kappa1 / 20.0;
    try {
      const AvalancheSchedule av = avalanche_times(a, s, x, eps, kappa1, o.n0, n);
      sched["times"] = av.times;
      sched["log_gaps"] = jvec(av.log_gaps);
      sched["log_bridge_gaps"] = jvec(av.log_bridge_gaps);
      sched["log_rifts"] = jvec(av.log_rifts);
    } catch (const Error& e) {
      sched["error"] = e.what();
    }
  }
  rec["schedule"] = sched;
  return rec;
}

}  // namespace

int run_experiment(ExperimentConfig cfg, const RunOptions& options, std::ostream& log) {
  const auto wall_start = std::chrono::steady_clock::now();
  const std::string started = iso_now();
  if (options.seed) cfg.seed = *options.seed;
  if (options.format) cfg.format = *options.format;
  if (options.out_dir) cfg.output_dir = *options.out_dir;
  const int threads = resolve_threads(options.threads > 0 ? options.threads : cfg.threads);

  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  for (const auto& w : cfg.warnings) log << "warning: " << w << "\n";

  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    log << "I/O error: cannot create output directory '" << dir.string() << "'\n";
    return kExitIo;
  }
  Writer out(dir, cfg.format);

  const BaseSystem s = build_base(cfg.base);
  const Cocycle a = build_cocycle(cfg);
  const int m = a.dim();
  auto stage_seed = [&](const std::string& name) { return mix(cfg.seed, fnv1a(name)); };
  std::map<std::string, Stage> stages;
  bool degenerate = false;

  try {
    // Spectrum and gap pattern: needed by every downstream stage.
    SpectrumEstimate top;
    Signature tau;
    double kappa = 0.0;   // min gap over tau
    double kappa1 = 0.0;  // L_1 - L_2
    {
      StageClock clock;
      Table t({"n", "i", "L_i_nats_per_step", "std_error_nats_per_step"});
      std::vector<std::vector<std::pair<double, double>>> curves(static_cast<std::size_t>(m));
      for (std::int64_t n : cfg.scales) {
        log << "spectrum: n=" << n << "\n";
        const SpectrumEstimate est = estimate_spectrum(a, s, n, cfg.samples, stage_seed("spectrum"), threads);
        for (int i = 0; i < m; ++i) {
          const auto ui = static_cast<std::size_t>(i);
          t.add({std::to_string(n), std::to_string(i + 1), num(est.values[ui]), num(est.std_errors[ui])});
          curves[ui].emplace_back(static_cast<double>(n), est.values[ui]);
        }
        top = est;
      }
      const GapPattern gp = detect_gap_pattern(top);
      tau = cfg.tau ? Signature(m, *cfg.tau) : gp.tau;
      kappa = std::numeric_limits<double>::infinity();
      for (int t_j : tau.dims()) kappa = std::min(kappa, top.values[static_cast<std::size_t>(t_j - 1)] - top.values[static_cast<std::size_t>(t_j)]);
      if (tau.empty()) kappa = 0.0;
      kappa1 = m >= 2 ? top.values[0] - top.values[1] : 0.0;
      if (!std::isfinite(kappa1)) kappa1 = 0.0;

      Stage st;
      st.status = cfg.has("spectrum") ? "ok" : "internal";
      st.detail["detected_tau"] = gp.tau.dims();
      st.detail["tau"] = tau.dims();
      st.detail["tau_pinned"] = cfg.tau.has_value();
      st.detail["gap"] = jnum(kappa);
      st.detail["threshold"] = jnum(gp.threshold);
      st.detail["exact"] = gp.exact;
      if (cfg.has("spectrum")) {
        out.table("spectrum", t);
        if (cfg.plots) {
          for (int i = 0; i < m; ++i) out.plot("spectrum_L" + std::to_string(i + 1) + ".dat", curves[static_cast<std::size_t>(i)]);
        }
      }
      st.seconds = clock.seconds();
      stages["spectrum"] = st;
    }

    if (cfg.has("oseledets")) {
      StageClock clock;
      Stage st;
      const std::int64_t n = cfg.oseledets.n > 0 ? cfg.oseledets.n : cfg.scales.back();
      std::vector<std::int64_t> conv = cfg.oseledets.convergence_scales;
      if (conv.empty()) {
        for (std::int64_t k = 1; k <= 16; ++k) {
          const std::int64_t v = k * n / 32;
          if (v >= 1 && (conv.empty() || v > conv.back())) conv.push_back(v);
        }
      }
      if (tau.empty()) {
        st.status = "degenerate";
        st.detail["reason"] = "no gap pattern: tau is empty";
        degenerate = true;
      } else {
        log << "oseledets: " << cfg.oseledets.phases << " phases at n=" << n << "\n";
        const auto phases = s.sample_phases(cfg.oseledets.phases, stage_seed("oseledets"));
        const auto lines = parallel_map<std::string>(phases.size(), threads, [&](std::size_t i) {
          return oseledets_record(a, s, phases[i], i, n, tau, conv, kappa1, cfg.oseledets).dump();
        });
        std::string body;
        std::size_t defined = 0;
        for (const auto& l : lines) {
          body += l + "\n";
          defined += json::parse(l)["direction_defined"].get<bool>();
        }
        out.text("oseledets.jsonl", body);
        st.detail["phases"] = phases.size();
        st.detail["defined"] = defined;
        st.status = defined > 0 ? "ok" : "degenerate";
        if (defined == 0) {
          st.detail["reason"] = "direction undefined at every sampled phase";
          degenerate = true;
        }
      }
      st.seconds = clock.seconds();
      stages["oseledets"] = st;
    }

    if (cfg.has("continuity")) {
      StageClock clock;
      Stage st;
      if (tau.empty()) {
        st.status = "degenerate";
        st.detail["reason"] = "no gap pattern: tau is empty";
        degenerate = true;
      } else {
        ContinuityOptions o;
        o.n = cfg.continuity.n > 0 ? cfg.continuity.n : cfg.scales.back();
        o.samples = cfg.continuity.samples > 0 ? cfg.continuity.samples : cfg.samples;
        o.seed = stage_seed("continuity");
        o.threads = threads;
        o.target = cfg.continuity.target;
        o.tau = tau;
        if (cfg.continuity.tau_b) o.tau_b = Signature(m, *cfg.continuity.tau_b);
        o.alpha_trial = cfg.continuity.alpha_trial;
        log << "continuity: " << cfg.continuity.h.size() << " perturbations at n=" << o.n << "\n";
        const auto records = continuity_experiment(a, make_family(cfg, a), cfg.continuity.h, s, o);
        const ModulusFit fit = modulus_fit(records);
        Table t({"h", "mean_dist", "q90_dist", "alpha", "q50_dist", "cocycle_distance", "exceed_fraction",
                 "defined", "undefined"});
        std::vector<std::pair<double, double>> curve;
        std::size_t defined = 0;
        for (const auto& r : records) {
          t.add({num(r.h), num(r.mean), num(r.q90), num(fit.alpha), num(r.q50), num(r.cocycle_distance),
                 num(r.exceed_fraction), std::to_string(r.defined), std::to_string(r.undefined)});
          curve.emplace_back(r.h, r.mean);
          defined += r.defined;
        }
        out.table("continuity", t);
        if (cfg.plots) out.plot("continuity.dat", curve);
        st.detail["target"] = to_string(o.target);
        st.detail["alpha"] = jnum(fit.alpha);
        st.detail["alpha_defined"] = fit.defined;
        if (!fit.defined) st.detail["alpha_reason"] = fit.reason;
        st.status = defined > 0 ? "ok" : "degenerate";
        if (defined == 0) {
          st.detail["reason"] = "targets undefined at every sampled phase";
          degenerate = true;
        }
      }
      st.seconds = clock.seconds();
      stages["continuity"] = st;
    }

    if (cfg.has("deviation")) {
      StageClock clock;
      Stage st;
      const std::size_t samples = cfg.deviation.samples > 0 ? cfg.deviation.samples : cfg.samples;
      log << "deviation: " << cfg.scales.size() << " scales x " << cfg.deviation.eps.size() << " eps\n";
      const DeviationProfile p = deviation_profile(a, s, cfg.scales, cfg.deviation.eps, samples,
                                                   stage_seed("deviation"), threads);
      Table t({"n", "eps_nats_per_step", "reference_nats_per_step", "measure", "wilson_lower", "wilson_upper"});
      for (std::size_t i = 0; i < p.scales.size(); ++i) {
        std::vector<std::pair<double, double>> curve;
        for (std::size_t j = 0; j < p.epsilons.size(); ++j) {
          const Frequency& f = p.measures[i][j];
          t.add({std::to_string(p.scales[i]), num(p.epsilons[j]), num(p.references[i]), num(f.value), num(f.lower),
                 num(f.upper)});
          curve.emplace_back(p.epsilons[j], f.value);
        }
        if (cfg.plots) out.plot("deviation_n" + std::to_string(p.scales[i]) + ".dat", curve);
      }
      out.table("deviation", t);
      st.status = "ok";
      st.seconds = clock.seconds();
      stages["deviation"] = st;
    }

    if (cfg.has("exceptional")) {
      StageClock clock;
      Stage st;
      if (!(kappa1 > 0.0)) {
        st.status = "degenerate";
        st.detail["reason"] = "no gap between L_1 and L_2";
        degenerate = true;
      } else {
        const std::int64_t n = cfg.exceptional.n > 0 ? cfg.exceptional.n : cfg.scales.front();
        const std::size_t samples = cfg.exceptional.samples > 0 ? cfg.exceptional.samples : cfg.samples;
        const std::int64_t n_max =
            cfg.exceptional.speed_n_max > 0 ? cfg.exceptional.speed_n_max : std::min<std::int64_t>(n * n, 4096);
        log << "exceptional: n=" << n << "\n";
        const ExceptionalSets ex = exceptional_set_frequency(a, s, n, kappa1, samples, stage_seed("exceptional"), threads);
        const SpeedReport sp =
            speed_of_convergence_check(a, s, n, kappa1, samples, stage_seed("speed"), threads, std::max(n_max, n + 1));
        Table t({"set", "n", "frequency", "wilson_lower", "wilson_upper"});
        for (const auto& [name, f] : std::vector<std::pair<std::string, Frequency>>{
                 {"ldt", ex.ldt}, {"g", ex.g}, {"a", ex.a}, {"ga", ex.ga}, {"ap", ex.ap}, {"flat", ex.flat},
                 {"speed_violation", sp.violations}}) {
          t.add({name, std::to_string(n), num(f.value), num(f.lower), num(f.upper)});
        }
        out.table("exceptional", t);
        st.status = "ok";
        st.detail["kappa"] = jnum(kappa1);
        st.detail["eps_n"] = jnum(ex.eps_n);
        st.detail["mes_n"] = jnum(ex.mes_n);
        st.detail["shifts"] = ex.shifts;
        st.detail["union_bound_holds"] = ex.union_bound_holds;
        st.detail["nested"] = ex.nested;
        st.detail["speed_n_max"] = sp.n_max;
      }
      st.seconds = clock.seconds();
      stages["exceptional"] = st;
    }
  } catch (const std::ios_base::failure& e) {
    log << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    log << "degenerate pipeline: " << e.what() << "\n";
    degenerate = true;
    stages["error"].status = "degenerate";
    stages["error"].detail["message"] = e.what();
  }

  json manifest;
  manifest["config_hash"] = "fnv1a64:" + hex(fnv1a(cfg.raw.dump()));
  manifest["seeds"]["master"] = cfg.seed;
  for (const auto& name : {"spectrum", "oseledets", "continuity", "deviation", "exceptional", "speed"}) {
    manifest["seeds"][name] = stage_seed(name);
  }
  manifest["versions"] = {{"oslab", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  manifest["threads"] = threads;
  manifest["started"] = started;
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  for (const auto& [name, st] : stages) {
    manifest["stages"][name] = {{"status", st.status}, {"seconds", st.seconds}, {"detail", st.detail}};
  }
  manifest["pipelines"] = cfg.pipelines;
  manifest["warnings"] = cfg.warnings;
  manifest["config"] = cfg.raw;
  try {
    std::vector<std::string> files = out.written();
    files.push_back("manifest.json");
    manifest["outputs"] = files;
    out.text("manifest.json", manifest.dump(2) + "\n");
  } catch (const std::ios_base::failure& e) {
    log << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }
  return degenerate ? kExitDegenerate : kExitOk;
}

// Describe --------------------------------------------------------------------

std::string describe(const std::string& name) {
  static const std::map<std::string, std::string> text{
      {"constant",
       "constant: A(x) = G for every x.\n"
       "  params: matrix (m x m rows) or diag (list). Any base system.\n"
       "  Lyapunov exponents are the log moduli of the eigenvalues of G.\n"},
      {"schrodinger",
       "schrodinger: A(x) = [[E - 2 lambda cos(2 pi x), -1], [1, 0]] over a 1-D rotation.\n"
       "  params: E (real, default 0), lambda (real coupling, required).\n"
       "  ranges: any real E and lambda; |lambda| > 1 gives L_1 >= log|lambda| > 0.\n"
       "  sup norm bound |E| + 2|lambda| + 1.\n"},
      {"diagonal_random",
       "diagonal_random: i.i.d. diagonal matrices over a Bernoulli shift.\n"
       "  params: values = [[v_1^1, ...], ..., [v_m^1, ...]]; coordinate i takes the values\n"
       "  values[i], decoded from the shift symbol in mixed radix (coordinate 0 least\n"
       "  significant). The base alphabet must be the product of the list sizes.\n"},
      {"random_glm",
       "random_glm: m x m Gaussian matrices selected by the shift symbol.\n"
       "  params: m (dimension), count (alphabet size), seed, scale (entry std, default 1).\n"},
      {"custom_table",
       "custom_table: finitely many user matrices.\n"
       "  params: matrices (list of m x m) or csv (one row-major matrix per line);\n"
       "  partition = symbolic (indexed by the shift symbol) or torus (indexed by the\n"
       "  interval of the first coordinate cut at breakpoints).\n"},
      {"golden", "golden: rotation x -> x + (sqrt 5 - 1)/2 on the circle, rotation number in extended precision.\n"},
      {"rotation", "rotation: x -> x + alpha on the d-torus. params: alpha (number or list).\n"},
      {"bernoulli", "bernoulli: two-sided shift with i.i.d. symbols of the given weights. params: weights.\n"},
      {"markov",
       "markov: stationary two-sided Markov shift. params: matrix (row-stochastic), window (cached\n"
       "  path length, default 2^20).\n"},
      {"spectrum",
       "spectrum: L_1 >= ... >= L_m at every configured scale n, each L_i the difference of\n"
       "  successive exterior-power exponents averaged over sampled phases, with standard errors.\n"
       "  The gap pattern tau is detected at the largest scale (ties resolve to fewer gaps).\n"
       "  Output: spectrum.csv (n, i, L_i, std_error).\n"},
      {"oseledets",
       "oseledets: per sampled phase at scale n: most expanding flag of signature tau, filtration\n"
       "  F_j = (most expanding t_{j-1}-plane)^perp, decomposition E_j = adjoint flag meet\n"
       "  filtration, invariance residuals d(A(x)E_j(x), E_j(Tx)), convergence slopes of\n"
       "  log d(v^(k), v^(n)), the alignment rate (1/n) log alpha and an avalanche-time schedule.\n"
       "  Output: oseledets.jsonl.\n"},
      {"continuity",
       "continuity: distances between the tau-restricted targets (direction, filtration or\n"
       "  decomposition) of a perturbed cocycle B(h) and of A on common phases, for a decreasing\n"
       "  list of h; reports mean, quantiles, the empirical CDF and the fitted exponent alpha of\n"
       "  mean distance ~ h^alpha. Families: energy_shift (schrodinger E -> E + h) and entry\n"
       "  (A + h e_row e_col^T). Output: continuity.csv (h, mean_dist, q90_dist, alpha, ...).\n"},
      {"deviation",
       "deviation: empirical mu{|(1/n) log||A^(n)(x)|| - L_1^(n)| > eps} with 95% Wilson intervals\n"
       "  at every configured scale and eps; the reference L_1^(n) comes from an independent\n"
       "  sample. Output: deviation.csv.\n"},
      {"exceptional",
       "exceptional: membership frequencies of the exceptional sets ldt, g (gap below e^{n kappa/2}),\n"
       "  a (deviations over the window n <= m <= 3n at x and T^n x), ga, ap (shifted union) and\n"
       "  flat (scales n and 2n), plus the fraction of phases violating the convergence speed\n"
       "  d(v(B^(n)(x)), v^(N)(x)) < e^{-3 n kappa / 10}. Output: exceptional.csv.\n"},
      {"ap",
       "ap (Avalanche Principle check, library call ap_check):\n"
       "  hypotheses: kappa_ap <= 0.01 eps_ap^2;\n"
       "    gap:   gr(g_i) > 1/kappa_ap for every block g_i;\n"
       "    angle: ||g_i g_{i-1}|| / (||g_i|| ||g_{i-1}||) > eps_ap for consecutive blocks.\n"
       "  conclusion: d(v(g^(n)), v(g_0)) and d(v(g^(n)*), v(g_{n-1}*)) are each at most\n"
       "    100 kappa_ap / eps_ap; the measured constant is reported.\n"
       "  failures name the block index and the violated condition.\n"},
  };
  if (name == "pipelines") {
    std::string s = "pipelines:\n";
    for (const auto& p : pipeline_names()) s += "  " + p + "\n";
    s += "library checks: ap\ncocycles:";
    for (const auto& c : catalog_names()) s += " " + c;
    s += "\nbase systems: golden rotation bernoulli markov\n";
    return s;
  }
  const auto it = text.find(name);
  if (it == text.end()) throw InvalidArgument("unknown name '" + name + "'; try 'describe pipelines'");
  return it->second;
}

}  // namespace oslab
