#include "strichartz/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <tbb/parallel_for.h>

#include "strichartz/analysis.hpp"
#include "strichartz/artifacts.hpp"
#include "strichartz/constants.hpp"

namespace strichartz {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<ExperimentKind, const char*>, 10> kKinds{{
    {ExperimentKind::Constants, "constants"},
    {ExperimentKind::Ratio, "ratio"},
    {ExperimentKind::SweepSoliton, "sweep-soliton"},
    {ExperimentKind::SweepBreather, "sweep-breather"},
    {ExperimentKind::HermiteStability, "hermite-stability"},
    {ExperimentKind::HermiteOpt, "hermite-opt"},
    {ExperimentKind::Train, "train"},
    {ExperimentKind::FitGap, "fit-gap"},
    {ExperimentKind::FitBreather, "fit-breather"},
    {ExperimentKind::Crossover, "crossover"},
}};

std::vector<double> range(double lo, double hi, double step) {
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = lo + step * i;
    if (v > hi + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

std::vector<double> default_params(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SweepBreather:
    case ExperimentKind::FitGap:
      return range(1.0, 15.0, 1.0);
    case ExperimentKind::SweepSoliton:
      return range(2.0, 8.0, 1.0);
    case ExperimentKind::HermiteStability:
      return {3.0, 6.0, 9.0, 12.0, 15.0};
    case ExperimentKind::Crossover:
      return range(6.0, 20.0, 0.5);
    default:
      return {};
  }
}

/// Pulls typed keys out of one JSON object and records every problem.
class Reader {
 public:
  Reader(const json& obj, std::string prefix, std::vector<Violation>& out)
      : obj_(obj), prefix_(std::move(prefix)), out_(out) {}

  bool has(const char* key) const { return obj_.contains(key); }

  const json* child(const char* key) {
    if (!obj_.contains(key)) return nullptr;
    used_.insert(key);
    return &obj_.at(key);
  }

  template <typename T>
  void get(const char* key, T& dst, const char* expected) {
    const json* v = child(key);
    if (!v) return;
    try {
      dst = v->get<T>();
    } catch (const json::exception&) {
      error(key, std::string("must be ") + expected);
    }
  }

  void number(const char* key, double& dst) {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_number()) return error(key, "must be a number");
    dst = v->get<double>();
    if (!std::isfinite(dst)) error(key, "must be finite");
  }

  template <typename T>
  void count(const char* key, T& dst, long long min) {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_number_integer() || v->get<long long>() < min)
      return error(key, "must be an integer >= " + std::to_string(min));
    dst = static_cast<T>(v->get<long long>());
  }

  void error(const std::string& key, const std::string& msg) {
    out_.push_back({Violation::Severity::Error, prefix_ + key, msg});
  }

  void finish() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!used_.count(it.key())) error(it.key(), "is not a recognised key");
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<Violation>& out_;
  std::set<std::string> used_;
};

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.kind);
  j["propagator"] = c.propagator == PropagatorKind::Airy ? "airy" : "schrodinger";
  j["d"] = c.d;
  j["q"] = c.q;
  j["r"] = c.r;
  j["gamma"] = c.gamma ? json(*c.gamma) : json(nullptr);
  j["critical"] = c.critical;
  const auto g = experiment_grid(c);
  j["grid"] = {{"R", g.half_width()}, {"T", g.half_time()}, {"N", g.n()}, {"M", g.m()}};
  j["seeds"] = c.seeds;
  j["iterations"] = c.iterations;
  j["precision"] = c.precision == Precision::Double ? 64 : 32;
  j["quadrature"] = c.rule == QuadratureRule::Rectangle ? "rectangle" : "trapezoid";
  j["activation"] = to_string(c.arch.activation);
  j["symmetrize"] = c.arch.symmetrize;
  j["output_dim"] = c.arch.output_dim;
  j["width"] = c.arch.width;
  j["depth"] = c.arch.depth;
  j["shared_activation"] = c.arch.shared_activation;
  j["lr"] = {{"min", c.schedule.min_lr}, {"max", c.schedule.max_lr}, {"period", c.schedule.period}};
  j["ridge"] = c.ridge;
  j["boundary_weight"] = c.boundary_weight;
  j["log_every"] = c.log_every;
  j["max_retries"] = c.max_retries;
  j["params"] = c.params;
  json pairs = json::array();
  for (const auto& [q, r] : c.pairs) pairs.push_back({q, r});
  j["pairs"] = pairs;
  j["profile"] = c.profile ? to_json(*c.profile) : json(nullptr);
  j["hermite"] = {{"n_terms", c.hermite.n_terms},
                  {"iterations", c.hermite.iterations},
                  {"lr", c.hermite.lr},
                  {"restarts", c.hermite.restarts}};
  j["n_max"] = c.n_max;
  j["beta"] = c.beta;
  j["window"] = c.window_hi >= 1e300 ? json::array({c.window_lo, nullptr}) : json::array({c.window_lo, c.window_hi});
  j["input"] = c.input;
  return j;
}

void check_pair(const ExperimentConfig& c, std::vector<Violation>& out) {
  try {
    validate(ratio_config(c, experiment_grid(c)));
  } catch (const InvalidArgument& e) {
    out.push_back({Violation::Severity::Error, "q,r", e.what()});
  }
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment(const std::string& name) {
  for (const auto& [k, n] : kKinds)
    if (name == n) return k;
  return std::nullopt;
}

std::string describe(const Violation& v) {
  return std::string(v.severity == Violation::Severity::Error ? "error" : "warning") + ": " + v.field + ": " +
         v.message;
}

ConfigError::ConfigError(std::vector<Violation> vs)
    : InvalidArgument([&] {
        std::string msg = "invalid experiment config";
        for (const auto& v : vs)
          if (v.severity == Violation::Severity::Error) msg += "\n  " + describe(v);
        return msg;
      }()),
      violations(std::move(vs)) {}

SpaceTimeGrid experiment_grid(const ExperimentConfig& c) {
  SpaceTimeGrid base = [&] {
    switch (c.kind) {
      case ExperimentKind::SweepBreather:
      case ExperimentKind::FitGap:
        return make_grid(500.0, 5.0, 8192, 8192, 1);
      case ExperimentKind::HermiteOpt:
        return make_grid(500.0, 5.0, 4096, 1024, 1);
      case ExperimentKind::HermiteStability:
        return hermite_stability_grid(15.0);
      default:
        return default_grid(c.propagator, c.propagator == PropagatorKind::Airy ? 1 : c.d);
    }
  }();
  return make_grid(c.grid.R.value_or(base.half_width()), c.grid.T.value_or(base.half_time()),
                   c.grid.N.value_or(base.n()), c.grid.M.value_or(base.m()), base.dim());
}

RatioConfig ratio_config(const ExperimentConfig& c, const SpaceTimeGrid& grid) {
  RatioConfig rc{grid, c.propagator, 0.0, NormSpec{c.q, c.r}, c.rule, c.precision, c.critical};
  if (c.gamma) {
    rc.gamma = *c.gamma;
  } else if (c.propagator == PropagatorKind::Airy) {
    rc.gamma = airy_gamma(c.q, c.r).value_or(0.0);
  }
  return rc;
}

ParseOutcome analyse_config(const json& doc) {
  ParseOutcome out;
  auto& vs = out.violations;
  if (!doc.is_object()) {
    vs.push_back({Violation::Severity::Error, "", "config must be a JSON object"});
    return out;
  }
  ExperimentConfig c;
  Reader rd(doc, "", vs);

  std::string kind_name;
  rd.get("experiment", kind_name, "a string");
  if (!rd.has("experiment")) {
    rd.error("experiment", "is required");
  } else if (auto k = parse_experiment(kind_name)) {
    c.kind = *k;
  } else if (!kind_name.empty()) {
    rd.error("experiment", "unknown kind '" + kind_name + "'");
  }

  std::string prop = "airy";
  rd.get("propagator", prop, "a string");
  if (prop == "airy")
    c.propagator = PropagatorKind::Airy;
  else if (prop == "schrodinger")
    c.propagator = PropagatorKind::Schrodinger;
  else
    rd.error("propagator", "must be 'airy' or 'schrodinger'");

  rd.count("d", c.d, 1);
  if (c.d > 2) rd.error("d", "must be 1 or 2");
  rd.number("q", c.q);
  rd.number("r", c.r);
  if (const json* g = rd.child("gamma"); g && !g->is_null()) {
    if (g->is_number())
      c.gamma = g->get<double>();
    else
      rd.error("gamma", "must be a number or null");
  }
  rd.get("critical", c.critical, "a boolean");

  if (const json* g = rd.child("grid")) {
    if (!g->is_object()) {
      rd.error("grid", "must be an object");
    } else {
      Reader gr(*g, "grid.", vs);
      double R = 0, T = 0;
      std::size_t N = 0, M = 0;
      if (gr.has("R")) gr.number("R", R), c.grid.R = R;
      if (gr.has("T")) gr.number("T", T), c.grid.T = T;
      if (gr.has("N")) gr.count("N", N, 2), c.grid.N = N;
      if (gr.has("M")) gr.count("M", M, 2), c.grid.M = M;
      gr.finish();
    }
  }

  if (const json* s = rd.child("seeds")) {
    if (!s->is_array()) {
      rd.error("seeds", "must be a list of nonnegative integers");
    } else {
      c.seeds.clear();
      for (const auto& e : *s) {
        if (!e.is_number_integer() || e.get<long long>() < 0) {
          rd.error("seeds", "must be a list of nonnegative integers");
          break;
        }
        c.seeds.push_back(e.get<std::uint64_t>());
      }
    }
  }
  rd.count("iterations", c.iterations, 0);

  int bits = 64;
  rd.count("precision", bits, 0);
  if (bits == 32)
    c.precision = Precision::Single;
  else if (bits != 64)
    rd.error("precision", "must be 32 or 64");

  std::string quad = "rectangle";
  rd.get("quadrature", quad, "a string");
  if (quad == "trapezoid")
    c.rule = QuadratureRule::Trapezoid;
  else if (quad != "rectangle")
    rd.error("quadrature", "must be 'rectangle' or 'trapezoid'");

  std::string act = "wavelet";
  rd.get("activation", act, "a string");
  try {
    c.arch.activation = parse_activation(act);
  } catch (const InvalidArgument& e) {
    rd.error("activation", e.what());
  }
  rd.get("symmetrize", c.arch.symmetrize, "a boolean");
  rd.count("output_dim", c.arch.output_dim, 1);
  rd.count("width", c.arch.width, 1);
  rd.count("depth", c.arch.depth, 1);
  rd.get("shared_activation", c.arch.shared_activation, "a boolean");
  c.arch.input_dim = c.propagator == PropagatorKind::Airy ? 1 : c.d;
  try {
    validate(c.arch);
  } catch (const InvalidArgument& e) {
    rd.error("output_dim", e.what());
  }

  if (const json* lr = rd.child("lr")) {
    if (!lr->is_object()) {
      rd.error("lr", "must be an object");
    } else {
      Reader lrr(*lr, "lr.", vs);
      lrr.number("min", c.schedule.min_lr);
      lrr.number("max", c.schedule.max_lr);
      lrr.count("period", c.schedule.period, 1);
      lrr.finish();
      if (!(c.schedule.min_lr > 0.0) || !(c.schedule.max_lr >= c.schedule.min_lr))
        rd.error("lr", "needs 0 < min <= max");
    }
  }
  rd.number("ridge", c.ridge);
  if (c.ridge < 0.0) rd.error("ridge", "must be nonnegative");
  rd.number("boundary_weight", c.boundary_weight);
  if (c.boundary_weight < 0.0) rd.error("boundary_weight", "must be nonnegative");
  rd.count("log_every", c.log_every, 1);
  rd.count("max_retries", c.max_retries, 0);

  c.params = default_params(c.kind);
  rd.get("params", c.params, "a list of numbers");
  if (const json* p = rd.child("pairs")) {
    bool ok = p->is_array();
    if (ok)
      for (const auto& e : *p) ok = ok && e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number();
    if (!ok) {
      rd.error("pairs", "must be a list of [q, r] pairs");
    } else {
      for (const auto& e : *p) c.pairs.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  } else if (c.kind == ExperimentKind::Constants) {
    c.pairs = {{5.0, 10.0}, {6.0, 6.0}, {8.0, 4.0}, {12.0, 3.0}};
  }
  if (const json* p = rd.child("profile"); p && !p->is_null()) {
    try {
      c.profile = profile_from_json(*p);
      validate(*c.profile);
    } catch (const std::exception& e) {
      rd.error("profile", e.what());
    }
  }
  if (const json* h = rd.child("hermite")) {
    if (!h->is_object()) {
      rd.error("hermite", "must be an object");
    } else {
      Reader hr(*h, "hermite.", vs);
      hr.count("n_terms", c.hermite.n_terms, 1);
      hr.count("iterations", c.hermite.iterations, 0);
      hr.number("lr", c.hermite.lr);
      hr.count("restarts", c.hermite.restarts, 1);
      hr.finish();
      if (c.hermite.n_terms > kMaxHermiteDegree + 1) rd.error("hermite.n_terms", "must be at most 61");
    }
  }
  rd.count("n_max", c.n_max, 0);
  if (c.n_max > kMaxHermiteDegree) rd.error("n_max", "must be at most 60");
  rd.number("beta", c.beta);
  if (!(c.beta > 0.0)) rd.error("beta", "must be positive");
  if (const json* w = rd.child("window")) {
    if (!w->is_array() || w->size() != 2 || !(*w)[0].is_number() || !((*w)[1].is_number() || (*w)[1].is_null())) {
      rd.error("window", "must be [lo, hi] with hi a number or null");
    } else {
      c.window_lo = (*w)[0].get<double>();
      if ((*w)[1].is_number()) c.window_hi = (*w)[1].get<double>();
      if (!(c.window_lo < c.window_hi)) rd.error("window", "needs lo < hi");
    }
  }
  rd.get("input", c.input, "a string");
  std::string outdir = c.output_dir.string();
  rd.get("output_dir", outdir, "a string");
  c.output_dir = outdir;
  rd.finish();

  // Kind-specific requirements.
  const bool trains = c.kind == ExperimentKind::Train;
  if (trains && c.seeds.empty()) vs.push_back({Violation::Severity::Error, "seeds", "must not be empty"});
  if (c.kind == ExperimentKind::HermiteOpt && c.seeds.empty())
    vs.push_back({Violation::Severity::Error, "seeds", "must not be empty"});
  if (c.kind == ExperimentKind::Ratio && !c.profile)
    vs.push_back({Violation::Severity::Error, "profile", "is required for a ratio experiment"});
  if (c.kind == ExperimentKind::FitBreather && c.input.empty() && !c.profile)
    vs.push_back({Violation::Severity::Error, "input", "fit-breather needs a checkpoint, coefficient CSV or profile"});
  if ((c.kind == ExperimentKind::SweepBreather || c.kind == ExperimentKind::SweepSoliton ||
       c.kind == ExperimentKind::HermiteStability || c.kind == ExperimentKind::Crossover ||
       (c.kind == ExperimentKind::FitGap && c.input.empty())) &&
      c.params.empty())
    vs.push_back({Violation::Severity::Error, "params", "must not be empty"});
  for (double p : c.params)
    if (!std::isfinite(p) || p <= 0.0) {
      vs.push_back({Violation::Severity::Error, "params", "entries must be positive and finite"});
      break;
    }
  if (c.kind == ExperimentKind::SweepBreather || c.kind == ExperimentKind::SweepSoliton ||
      c.kind == ExperimentKind::HermiteStability || c.kind == ExperimentKind::HermiteOpt ||
      c.kind == ExperimentKind::FitGap) {
    if (c.propagator != PropagatorKind::Airy)
      vs.push_back({Violation::Severity::Error, "propagator", std::string(to_string(c.kind)) + " uses the Airy group"});
  }
  if (c.propagator == PropagatorKind::Airy && c.d != 1 && c.kind != ExperimentKind::Constants)
    vs.push_back({Violation::Severity::Error, "d", "the Airy group requires d = 1"});
  if (c.kind == ExperimentKind::Constants) {
    for (const auto& [q, r] : c.pairs)
      if (!is_schrodinger_admissible(c.d, q, r)) {
        std::ostringstream os;
        os << "(d,q,r) = (" << c.d << "," << q << "," << r << ") violates 2/q + d/r = d/2";
        vs.push_back({Violation::Severity::Error, "pairs", os.str()});
      }
  }

  const bool grid_ok = std::none_of(vs.begin(), vs.end(), [](const Violation& v) { return v.field.rfind("grid", 0) == 0; });
  if (grid_ok) {
    try {
      (void)experiment_grid(c);
    } catch (const InvalidArgument& e) {
      vs.push_back({Violation::Severity::Error, "grid", e.what()});
    }
  }
  const bool uses_pair = c.kind != ExperimentKind::Constants && c.kind != ExperimentKind::Crossover;
  const bool pair_ok = std::none_of(vs.begin(), vs.end(), [](const Violation& v) {
    return v.field == "q" || v.field == "r" || v.field == "d" || v.field == "gamma" || v.field == "propagator" ||
           v.field.rfind("grid", 0) == 0;
  });
  if (uses_pair && pair_ok) check_pair(c, vs);

  if (c.precision == Precision::Single && c.q * c.r >= 36.0) {
    std::ostringstream os;
    os << "32-bit evaluation with q*r = " << c.q * c.r << " risks overflow and NaNs; 64-bit is recommended";
    vs.push_back({Violation::Severity::Warning, "precision", os.str()});
  }

  const bool any_error =
      std::any_of(vs.begin(), vs.end(), [](const Violation& v) { return v.severity == Violation::Severity::Error; });
  if (!any_error) {
    if (!c.gamma && c.propagator == PropagatorKind::Airy && c.critical) c.gamma = airy_gamma(c.q, c.r);
    c.resolved = config_to_json(c);
    out.config = std::move(c);
  }
  return out;
}

std::vector<Violation> validate_config(const json& doc) { return analyse_config(doc).violations; }

ExperimentConfig parse_config(const json& doc) {
  auto outcome = analyse_config(doc);
  if (!outcome.config) throw ConfigError(std::move(outcome.violations));
  return std::move(*outcome.config);
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({{Violation::Severity::Error, "", "cannot read " + path.string()}});
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError({{Violation::Severity::Error, "", path.string() + ": " + e.what()}});
  }
}

json default_config_json(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.params = default_params(kind);
  if (kind == ExperimentKind::Constants) c.pairs = {{5.0, 10.0}, {6.0, 6.0}, {8.0, 4.0}, {12.0, 3.0}};
  if (kind == ExperimentKind::Ratio) c.profile = profile::Gaussian{};
  c.gamma = airy_gamma(c.q, c.r);
  auto j = config_to_json(c);
  j["output_dir"] = c.output_dir.string();
  return j;
}

namespace {

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, std::ostream& log)
      : cfg_(cfg), log_(log), manifest_(cfg.output_dir, to_string(cfg.kind), cfg.resolved) {}

  RunSummary run() {
    std::filesystem::create_directories(cfg_.output_dir);
    switch (cfg_.kind) {
      case ExperimentKind::Constants: constants(); break;
      case ExperimentKind::Ratio: ratio(); break;
      case ExperimentKind::SweepSoliton: sweep_soliton_run(); break;
      case ExperimentKind::SweepBreather: sweep_breather_run(); break;
      case ExperimentKind::HermiteStability: hermite_stability(); break;
      case ExperimentKind::HermiteOpt: hermite_opt(); break;
      case ExperimentKind::Train: train_run(); break;
      case ExperimentKind::FitGap: fit_gap(); break;
      case ExperimentKind::FitBreather: fit_breather_run(); break;
      case ExperimentKind::Crossover: crossover(); break;
    }
    return finish();
  }

 private:
  std::filesystem::path path(const std::string& name) const { return cfg_.output_dir / name; }

  void add(const std::string& name, const std::string& kind, std::vector<std::string> columns = {}) {
    manifest_.add(name, kind, std::move(columns));
    log_ << "wrote " << (cfg_.output_dir / name).string() << '\n';
  }

  RunSummary finish() {
    RunSummary s;
    s.manifest = manifest_.write();
    for (const auto& e : manifest_.entries()) s.artifacts.push_back(e.path);
    return s;
  }

  RatioConfig rc() const { return ratio_config(cfg_, experiment_grid(cfg_)); }

  void write_profile(const std::string& name, const SpaceTimeGrid& g, std::span<const Complex> u,
                     std::span<const Complex> fitted = {}) {
    std::vector<std::string> cols{"x", "re", "im", "abs"};
    if (!fitted.empty()) cols.push_back("fit");
    {
      CsvWriter w(path(name), cols);
      for (std::size_t j = 0; j < g.n(); ++j) {
        std::vector<CsvCell> row{g.x(j), u[j].real(), u[j].imag(), std::abs(u[j])};
        if (!fitted.empty()) row.push_back(fitted[j].real());
        w.row(row);
      }
    }
    add(name, "profile", cols);
  }

  void constants() {
    const std::vector<std::string> cols{"d", "q", "r", "gamma", "tilde_S", "a_r", "tilde_A", "known_value"};
    {
      CsvWriter w(path("constants.csv"), cols);
      for (const auto& [q, r] : cfg_.pairs) {
        const double nan = std::nan("");
        const bool one_d = cfg_.d == 1;
        const auto known = known_constant(cfg_.d, q, r);
        w.row({std::int64_t{cfg_.d}, q, r, one_d ? airy_gamma(q, r).value_or(nan) : nan, tilde_S(cfg_.d, q, r),
               one_d ? a_factor(r) : nan, one_d ? tilde_A(q, r) : nan, known.value_or(nan)});
        log_ << "(" << q << "," << r << ") tilde_S = " << format_double(tilde_S(cfg_.d, q, r));
        if (one_d) log_ << " tilde_A = " << format_double(tilde_A(q, r));
        log_ << '\n';
      }
    }
    add("constants.csv", "constants", cols);
  }

  void ratio() {
    const auto c = rc();
    const auto u = sample(*cfg_.profile, c.grid);
    const double value = strichartz_ratio(u, c);
    const std::vector<std::string> cols{"profile", "propagator", "q", "r", "gamma", "R", "T", "N", "M", "ratio",
                                        "resolved_fraction"};
    {
      CsvWriter w(path("ratio.csv"), cols);
      w.row({profile_name(*cfg_.profile), std::string(to_string(c.kind)), c.spec.q, c.spec.r, c.gamma,
             c.grid.half_width(), c.grid.half_time(), static_cast<std::int64_t>(c.grid.n()),
             static_cast<std::int64_t>(c.grid.m()), value, resolved_spectral_fraction(u, c.grid)});
    }
    log_ << "ratio = " << format_double(value) << '\n';
    add("ratio.csv", "table", cols);
  }

  void write_sweep(const std::string& name, const SweepResult& s) {
    const std::vector<std::string> cols{"parameter", "ratio", "reference", "gap", "resolved_fraction"};
    {
      CsvWriter w(path(name), cols);
      for (const auto& row : s.rows) w.row({row.parameter, row.ratio, row.reference, row.gap, row.resolved_fraction});
    }
    add(name, "sweep", cols);
    manifest_.note("reference", s.reference_label);
    if (!s.notes.empty()) manifest_.note("sweep_notes", s.notes);
    std::vector<Point> series;
    for (const auto& row : s.rows) series.emplace_back(row.parameter, row.ratio);
    const auto mono = monotonicity_report(series);
    log_ << name << ": " << s.rows.size() << " rows, " << mono.violations << " monotonicity violations\n";
  }

  void sweep_soliton_run() { write_sweep("sweep_soliton.csv", sweep_soliton(cfg_.params, rc())); }

  SweepResult sweep_breather_run() {
    auto s = sweep_breather(cfg_.params, rc(), cfg_.beta);
    write_sweep("sweep_breather.csv", s);
    return s;
  }

  void hermite_stability() {
    const auto c = rc();
    const auto rows = hermite_time_stability(cfg_.n_max, cfg_.params, c);
    const double ref = tilde_A(c.spec.q, c.spec.r);
    const std::vector<std::string> cols{"n", "half_time", "ratio", "reference"};
    {
      CsvWriter w(path("hermite_stability.csv"), cols);
      for (const auto& row : rows) w.row({std::int64_t{row.n}, row.half_time, row.ratio, ref});
    }
    add("hermite_stability.csv", "table", cols);
  }

  void write_fit(const std::string& name, const BreatherFit& f) {
    RecordWriter w(path(name));
    w.put("alpha", f.alpha)
        .put("beta", f.beta)
        .put("alpha_over_beta", f.alpha / f.beta)
        .put("t0", f.t0)
        .put("x0", f.x0)
        .put("amplitude", f.amplitude)
        .put("residual", f.residual)
        .put("starts", static_cast<std::int64_t>(f.starts));
  }

  std::vector<Complex> fitted_breather(const BreatherFit& f, const SpaceTimeGrid& g) {
    std::vector<Complex> out(g.n());
    for (std::size_t j = 0; j < g.n(); ++j) out[j] = f.amplitude * breather(f.t0, g.x(j), f.alpha, f.beta, 0.0, f.x0);
    return out;
  }

  void hermite_opt() {
    const auto c = rc();
    const auto res = optimize_hermite(c, cfg_.seeds.front(), cfg_.hermite);
    {
      CsvWriter w(path("hermite_coeffs.csv"), {"n", "coeff"});
      for (std::size_t n = 0; n < res.coeffs.size(); ++n) w.row({static_cast<std::int64_t>(n), res.coeffs[n]});
    }
    add("hermite_coeffs.csv", "coefficients", {"n", "coeff"});
    {
      CsvWriter w(path("hermite_restarts.csv"), {"restart", "ratio"});
      for (std::size_t i = 0; i < res.restart_ratios.size(); ++i)
        w.row({static_cast<std::int64_t>(i), res.restart_ratios[i]});
    }
    add("hermite_restarts.csv", "table", {"restart", "ratio"});

    std::vector<Complex> u(c.grid.n());
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = hermite_sum(res.coeffs, c.grid.x(j));
    const auto fit = fit_breather_to_profile(u, c.grid);
    write_profile("profile_hermite.csv", c.grid, u, fitted_breather(fit, c.grid));
    {
      RecordWriter w(path("fit_hermite.txt"));
      w.put("ratio", res.ratio)
          .put("reference", tilde_A(c.spec.q, c.spec.r))
          .put("gap", tilde_A(c.spec.q, c.spec.r) - res.ratio)
          .put("best_restart", static_cast<std::int64_t>(res.best_restart))
          .put("seed", static_cast<std::int64_t>(cfg_.seeds.front()))
          .put("alpha", fit.alpha)
          .put("beta", fit.beta)
          .put("alpha_over_beta", fit.alpha / fit.beta)
          .put("t0", fit.t0)
          .put("x0", fit.x0)
          .put("amplitude", fit.amplitude)
          .put("residual", fit.residual);
    }
    add("fit_hermite.txt", "fit");
    log_ << "best Hermite ratio " << format_double(res.ratio) << ", breather alpha " << fit.alpha << " beta "
         << fit.beta << '\n';
  }

  void train_run() {
    const auto c = rc();
    TrainConfig tc = default_train_config(c);
    tc.arch = cfg_.arch;
    tc.loss.ridge = cfg_.ridge;
    tc.loss.boundary_weight = cfg_.boundary_weight;
    tc.iterations = cfg_.iterations;
    tc.schedule = cfg_.schedule;
    tc.log_every = cfg_.log_every;
    tc.max_retries = cfg_.max_retries;
    const std::string hash = config_hash(cfg_.resolved);
    const std::vector<std::string> cols{"iteration", "constant", "loss", "boundary", "ridge", "lr"};

    std::mutex log_mutex;
    std::vector<std::optional<std::string>> diverged(cfg_.seeds.size());
    std::vector<std::optional<TrainResult>> results(cfg_.seeds.size());
    tbb::parallel_for(std::size_t{0}, cfg_.seeds.size(), [&](std::size_t i) {
      const auto seed = cfg_.seeds[i];
      const std::string tag = "seed" + std::to_string(seed);
      CsvWriter hist(path("history_" + tag + ".csv"), cols);
      const auto start = std::chrono::steady_clock::now();
      auto on_log = [&](const HistoryRecord& r) {
        hist.row({static_cast<std::int64_t>(r.iteration), r.constant, r.loss, r.boundary, r.ridge, r.lr});
        std::lock_guard lock(log_mutex);
        log_ << tag << " iter " << r.iteration << " constant " << format_double(r.constant) << '\n';
      };
      try {
        results[i] = train(tc, seed, on_log);
        results[i]->history.config_hash = hash;
      } catch (const TrainingDiverged& e) {
        save_checkpoint(e.last_valid, path("checkpoint_" + tag + ".json"));
        diverged[i] = e.what();
      }
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      RecordWriter meta(path("run_" + tag + ".txt"));
      meta.put("seed", static_cast<std::int64_t>(seed))
          .put("config_hash", hash)
          .put("precision", std::string(cfg_.precision == Precision::Double ? "64" : "32"))
          .put("wall_clock_seconds", wall)
          .put("status", std::string(diverged[i] ? "diverged" : "ok"));
      if (results[i]) {
        meta.put("restarts", static_cast<std::int64_t>(results[i]->history.restarts))
            .put("final_constant", results[i]->history.records.back().constant);
      }
    });

    for (std::size_t i = 0; i < cfg_.seeds.size(); ++i) {
      const std::string tag = "seed" + std::to_string(cfg_.seeds[i]);
      if (results[i]) save_checkpoint(results[i]->net, path("checkpoint_" + tag + ".json"));
      add("history_" + tag + ".csv", "history", cols);
      add("checkpoint_" + tag + ".json", "checkpoint");
      add("run_" + tag + ".txt", "metadata");
      if (results[i]) write_profile("profile_" + tag + ".csv", c.grid, normalized_samples(results[i]->net, c.grid));
    }
    for (std::size_t i = 0; i < diverged.size(); ++i)
      if (diverged[i]) {
        finish();
        throw DivergenceError("seed " + std::to_string(cfg_.seeds[i]) + ": " + *diverged[i]);
      }
  }

  void fit_gap() {
    std::vector<Point> pts;
    if (cfg_.input.empty()) {
      for (const auto& row : sweep_breather_run().rows) pts.emplace_back(row.parameter, row.gap);
    } else {
      const auto table = read_csv(cfg_.input);
      const auto a = table.numbers("parameter");
      const auto g = table.numbers("gap");
      for (std::size_t i = 0; i < a.size(); ++i) pts.emplace_back(a[i], g[i]);
    }
    const auto window = fit_window(pts, cfg_.window_lo, cfg_.window_hi);
    RecordWriter w(path("fit_gap.txt"));
    w.put("window_lo", cfg_.window_lo).put("window_hi", cfg_.window_hi);
    try {
      const auto fit = power_law_fit(window);
      w.put("status", std::string("ok"))
          .put("C", fit.C)
          .put("kappa", fit.kappa)
          .put("residual", fit.residual)
          .put("n_points", static_cast<std::int64_t>(fit.n_points));
      log_ << "gap ~ " << fit.C << " alpha^-" << fit.kappa << '\n';
    } catch (const BoundCrossing& e) {
      w.put("status", std::string("bound-crossing"))
          .put("crossing_parameter", e.parameter)
          .put("crossing_gap", e.gap);
      add("fit_gap.txt", "fit");
      finish();
      throw;
    }
    add("fit_gap.txt", "fit");
  }

  void fit_breather_run() {
    SpaceTimeGrid g = experiment_grid(cfg_);
    std::vector<Complex> u;
    if (cfg_.profile) {
      u = sample(*cfg_.profile, g);
    } else if (cfg_.input.size() >= 4 && cfg_.input.substr(cfg_.input.size() - 4) == ".csv") {
      const auto table = read_csv(cfg_.input);
      const auto coeffs = table.numbers("coeff");
      u.resize(g.n());
      for (std::size_t j = 0; j < g.n(); ++j) u[j] = hermite_sum(coeffs, g.x(j));
    } else {
      const auto net = load_checkpoint(cfg_.input);
      u = normalized_samples(net, g);
    }
    const auto fit = fit_breather_to_profile(u, g);
    write_fit("fit_breather.txt", fit);
    add("fit_breather.txt", "fit");
    write_profile("profile_fit.csv", g, u, fitted_breather(fit, g));
    log_ << "breather alpha " << fit.alpha << " beta " << fit.beta << " residual " << fit.residual << '\n';
  }

  void crossover() {
    const std::vector<std::string> cols{"r", "q", "tilde_A", "tilde_S", "difference"};
    {
      CsvWriter w(path("crossover.csv"), cols);
      for (double r : cfg_.params) {
        if (r <= 2.0) continue;
        const double q = admissible_q(r);
        const double a = tilde_A(q, r), s = tilde_S(1, q, r);
        w.row({r, q, a, s, a - s});
      }
    }
    add("crossover.csv", "table", cols);
    const double rs = crossover_radius();
    RecordWriter(path("fit_crossover.txt")).put("r_star", rs).put("q_star", admissible_q(rs));
    add("fit_crossover.txt", "fit");
    log_ << "crossover at r = " << format_double(rs) << '\n';
  }

  const ExperimentConfig& cfg_;
  std::ostream& log_;
  Manifest manifest_;
};

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, std::ostream& log) { return Runner(cfg, log).run(); }

}  // namespace strichartz
