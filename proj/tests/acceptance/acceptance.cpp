#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "common/pipelines.hpp"
#include "unit/helpers.hpp"
#include "strichartz/analysis.hpp"
#include "strichartz/artifacts.hpp"
#include "strichartz/constants.hpp"
#include "strichartz/experiment.hpp"
#include "strichartz/profiles.hpp"
#include "strichartz/quadrature.hpp"
#include "strichartz/ratio.hpp"
#include "strichartz/spectral.hpp"

using namespace strichartz;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome(const fs::path&)> run;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

/// "key = value" records written by the experiment runner.
std::map<std::string, std::string> read_record(const fs::path& p) {
  std::map<std::string, std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

RunSummary run(const json& doc, const fs::path& dir) {
  auto cfg = parse_config(doc);
  cfg.output_dir = dir;
  std::ofstream log(dir.string() + ".log");
  return run_experiment(cfg, log);
}

Outcome constant_identities(const fs::path&) {
  const double e1 = rel(tilde_S(1, 6, 6), std::pow(12.0, -1.0 / 12));
  const double e2 = rel(tilde_S(2, 4, 4), std::pow(2.0, -0.5));
  const double e3 = rel(tilde_S(1, 8, 4), std::pow(2.0, -0.25));
  const double worst = std::max({e1, e2, e3});
  return {worst <= 1e-12, "worst relative error " + fmt(worst, 3)};
}

Outcome frank_sabin(const fs::path&) {
  const std::pair<double, double> pairs[] = {{5, 10}, {6, 6}, {8, 4}, {12, 3}};
  const double expected[] = {0.7926, 0.7886, 0.8112, 0.8556};
  double worst = 0.0;
  std::string values;
  for (int i = 0; i < 4; ++i) {
    const double v = tilde_A(pairs[i].first, pairs[i].second);
    worst = std::max(worst, std::abs(v - expected[i]));
    values += (i ? " " : "") + fmt(v, 6);
  }
  return {worst <= 5e-4, "values " + values + ", worst deviation " + fmt(worst, 3)};
}

Outcome crossover(const fs::path&) {
  const double r = crossover_radius();
  return {std::abs(r - 14.185) <= 0.01, "r = " + fmt(r, 10)};
}

Outcome gradient_oracle(const fs::path&) {
  double worst = 0.0;
  std::size_t checked = 0;
  std::string worst_name;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = testing::random_pipeline(s);
    const auto g = testing::fd_check(p.program, p.params);
    checked += g.checked;
    if (g.worst > worst) {
      worst = g.worst;
      worst_name = p.description;
    }
  }
  return {worst <= 1e-4 && checked > 0,
          "worst relative error " + fmt(worst, 3) + " over " + std::to_string(checked) + " components (" + worst_name + ")"};
}

Outcome spectral_invariants(const fs::path&) {
  double iso = 0.0, lin = 0.0;
  for (auto kind : {PropagatorKind::Schrodinger, PropagatorKind::Airy}) {
    const auto grid = make_grid(20, 2, 512, 64, 1);
    const auto u = testing::random_datum(grid.n(), 1), v = testing::random_datum(grid.n(), 2);
    const Complex a(0.7, -1.3), b(-2.1, 0.4);
    std::vector<Complex> w(grid.n());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = a * u[j] + b * v[j];
    const auto fu = evolve(u, grid, kind, 0.0), fv = evolve(v, grid, kind, 0.0), fw = evolve(w, grid, kind, 0.0);
    const double n0 = l2_norm(u, grid.dx(), 1);
    double scale = 0.0;
    for (auto z : fw.values()) scale = std::max(scale, std::abs(z));
    for (std::size_t l = 0; l < grid.m(); ++l) {
      iso = std::max(iso, rel(l2_norm(fu.slice(l), grid.dx(), 1), n0));
      const auto su = fu.slice(l), sv = fv.slice(l), sw = fw.slice(l);
      for (std::size_t j = 0; j < grid.n(); ++j) lin = std::max(lin, std::abs(sw[j] - a * su[j] - b * sv[j]) / scale);
    }
  }
  const auto g = make_grid(30, 1, 2048, 2, 1);
  std::vector<std::vector<double>> f(21, std::vector<double>(g.n()));
  for (std::size_t j = 0; j < g.n(); ++j) {
    const auto h = hermite_fns(20, g.x(j));
    for (int n = 0; n <= 20; ++n) f[n][j] = h[n];
  }
  double ortho = 0.0;
  for (int n = 0; n <= 20; ++n)
    for (int m = 0; m <= n; ++m) {
      double s = 0.0;
      for (std::size_t j = 0; j < g.n(); ++j) s += f[n][j] * f[m][j];
      ortho = std::max(ortho, std::abs(g.dx() * s - (n == m ? 1.0 : 0.0)));
    }
  return {iso <= 1e-12 && lin <= 1e-12 && ortho <= 1e-6,
          "isometry " + fmt(iso, 3) + ", linearity " + fmt(lin, 3) + ", Hermite Gram " + fmt(ortho, 3)};
}

double breather_potential(double t, double x, double a, double b, double x1, double x2) {
  const double delta = a * (a * a - 3 * b * b);
  const double g = b * (3 * a * a - b * b);
  return 2 * std::numbers::sqrt2 * std::atan((b / a) * std::sin(a * x + delta * t + x1) / std::cosh(b * x + g * t + x2));
}

Outcome breather_suite(const fs::path&) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ut(-1, 1), ux(-5, 5), ua(0.5, 3), ub(0.5, 2), uph(-1, 1);
  const double h = 1e-5;
  double deriv = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = ut(rng), x = ux(rng), a = ua(rng), b = ub(rng), x1 = uph(rng), x2 = uph(rng);
    const double fd = (breather_potential(t, x + h, a, b, x1, x2) - breather_potential(t, x - h, a, b, x1, x2)) / (2 * h);
    const double exact = breather(t, x, a, b, x1, x2);
    deriv = std::max(deriv, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
  }
  const auto g = make_grid(500, 1, 8192, 2, 1);
  double mass = 0.0;
  for (double b : {1.0, 0.63, 1.7}) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.n(); ++j) s += std::pow(breather(0, g.x(j), 2.0, b, 0, 0), 2);
    mass = std::max(mass, std::abs(0.5 * g.dx() * s - 4 * b));
  }
  double scaling = 0.0;
  for (double x : {-3.0, -0.2, 0.0, 1.7, 9.0})
    for (auto [a, b] : {std::pair{1.24, 0.63}, std::pair{4.0, 2.0}, std::pair{3.0, 0.5}})
      scaling = std::max(scaling, std::abs(breather(0, x, a, b, 0, 0) - b * breather(0, b * x, a / b, 1, 0, 0)));
  return {deriv <= 1e-7 && mass <= 1e-4 && scaling <= 1e-10,
          "derivative " + fmt(deriv, 3) + ", mass " + fmt(mass, 3) + ", rescaling " + fmt(scaling, 3)};
}

Outcome scale_invariance(const fs::path&) {
  const auto cfg = default_config(PropagatorKind::Airy, 1, 6, 6);
  const auto u = sample(profile::Soliton{3, 1, 0}, cfg.grid);
  auto v = u;
  for (auto& z : v) z *= 3.7;
  const double homog = rel(strichartz_ratio(v, cfg), strichartz_ratio(u, cfg));
  const double dev = scaling_invariance_check(profile::Soliton{3, 1, 0}, 2.0, cfg);
  return {homog <= 1e-12 && dev < 5e-3, "amplitude " + fmt(homog, 3) + ", soliton scaling at lambda 2 " + fmt(dev, 3)};
}

Outcome hermite_optimizer(const fs::path& dir) {
  run(json{{"experiment", "hermite-opt"}, {"seeds", {0}}}, dir);
  const auto rec = read_record(dir / "fit_hermite.txt");
  const double ratio = std::stod(rec.at("ratio")), alpha = std::stod(rec.at("alpha")), beta = std::stod(rec.at("beta"));
  const bool ratio_ok = ratio >= 0.775 && ratio < tilde_A(6, 6);
  const bool fit_ok = std::abs(alpha - 1.24) <= 0.05 && std::abs(beta - 0.63) <= 0.05;
  return {ratio_ok && fit_ok,
          "ratio " + fmt(ratio, 8) + (ratio_ok ? "" : " (out of range)") + ", breather alpha " + fmt(alpha, 4) +
              " beta " + fmt(beta, 4) + (fit_ok ? "" : " (outside 0.05 of (1.24, 0.63))")};
}

Outcome schrodinger_training(const fs::path& dir) {
  const std::vector<int> seeds{0, 1, 2, 3, 4};
  run(json{{"experiment", "train"}, {"propagator", "schrodinger"}, {"seeds", seeds}, {"iterations", 2000}}, dir);
  const double target = std::pow(12.0, -1.0 / 12);
  double err = 0.0, worst_dist = 0.0;
  for (int s : seeds) {
    const auto hist = read_csv(dir / ("history_seed" + std::to_string(s) + ".csv"));
    err += rel(hist.numbers("constant").back(), target) / seeds.size();
    const auto prof = read_csv(dir / ("profile_seed" + std::to_string(s) + ".csv"));
    const auto x = prof.numbers("x"), a = prof.numbers("abs");
    const double dx = x[1] - x[0];
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) d2 += dx * std::pow(a[j] - gaussian(x[j]), 2);
    worst_dist = std::max(worst_dist, std::sqrt(d2));
  }
  return {err < 1e-2 && worst_dist < 5e-2,
          "mean relative error " + fmt(err, 4) + ", worst profile distance " + fmt(worst_dist, 4)};
}

Outcome airy_training(const fs::path& dir) {
  const std::vector<int> seeds{0, 1, 2};
  run(json{{"experiment", "train"},
           {"seeds", seeds},
           {"iterations", 2000},
           {"grid", {{"R", 500}, {"T", 5}, {"N", 4096}, {"M", 1024}}}},
      dir);
  const double bound = tilde_A(6, 6);
  bool ok = true;
  std::string finals;
  std::size_t crossings = 0;
  for (int s : seeds) {
    const auto c = read_csv(dir / ("history_seed" + std::to_string(s) + ".csv")).numbers("constant");
    for (double v : c) crossings += v >= bound;
    ok = ok && c.back() >= 0.770 && c.back() < bound;
    finals += (finals.empty() ? "" : " ") + fmt(c.back(), 6);
  }
  return {ok && crossings == 0, "final " + finals + ", logged crossings " + std::to_string(crossings)};
}

Outcome breather_sweep(const fs::path& dir) {
  try {
    run(json{{"experiment", "fit-gap"}}, dir);
  } catch (const BoundCrossing& e) {
    return {false, std::string("bound crossed: ") + e.what()};
  }
  const auto t = read_csv(dir / "sweep_breather.csv");
  const auto alpha = t.numbers("parameter"), ratio = t.numbers("ratio"), gap = t.numbers("gap");
  std::vector<Point> series;
  for (std::size_t i = 0; i < alpha.size(); ++i) series.emplace_back(alpha[i], ratio[i]);
  const auto mono = monotonicity_report(series);
  const bool gaps = std::all_of(gap.begin(), gap.end(), [](double g) { return g > 0.0; });
  const double kappa = std::stod(read_record(dir / "fit_gap.txt").at("kappa"));
  return {mono.violations == 0 && gaps && kappa >= 0.80 && kappa <= 1.00,
          std::to_string(mono.violations) + " monotonicity violations, gaps " + (gaps ? "positive" : "not all positive") +
              ", kappa " + fmt(kappa, 4)};
}

Outcome soliton_sweep(const fs::path& dir) {
  run(json{{"experiment", "sweep-soliton"}}, dir);
  const auto t = read_csv(dir / "sweep_soliton.csv");
  const auto p = t.numbers("parameter"), ratio = t.numbers("ratio"), ref = t.numbers("reference");
  bool increasing = true, below = true;
  double min_gap = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i > 0) increasing = increasing && ratio[i] > ratio[i - 1];
    below = below && ratio[i] < ref[i];
    min_gap = std::min(min_gap, ref[i] - ratio[i]);
  }
  return {increasing && below && p.size() == 7,
          std::string(increasing ? "increasing" : "not increasing") + ", " + (below ? "below" : "not below") +
              " the limit " + fmt(ref.front(), 8) + ", smallest gap " + fmt(min_gap, 3)};
}

Outcome gaussian_pairs(const fs::path& dir) {
  const auto grid = make_grid(1200, 60, 32768, 2048, 1);
  CsvWriter w(dir / "gaussian_pairs.csv", {"q", "r", "ratio", "tilde_S", "relative_error"});
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double r = 1.0 / ((k + 0.5) / 20.0);
    const double q = admissible_q(r);
    const auto cfg = with_grid(default_config(PropagatorKind::Schrodinger, 1, q, r), grid);
    const double v = strichartz_ratio(profile::Gaussian{}, cfg);
    const double e = rel(v, tilde_S(1, q, r));
    w.row({q, r, v, tilde_S(1, q, r), e});
    worst = std::max(worst, e);
  }
  return {worst <= 1e-3, "worst relative error " + fmt(worst, 3) + " over 10 pairs"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string output = "acceptance_artifacts";
  std::vector<int> only;
  app.add_option("--output", output, "Directory for artifacts");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "constant identities", 1e-3, constant_identities},
      {2, "Frank-Sabin values", 1e-3, frank_sabin},
      {3, "crossover", 1e-2, crossover},
      {4, "gradient oracle", 10, gradient_oracle},
      {5, "spectral invariants", 10, spectral_invariants},
      {6, "breather suite", 10, breather_suite},
      {7, "ratio scale invariance", 60, scale_invariance},
      {8, "Hermite optimizer", 15 * 60, hermite_optimizer},
      {9, "Schrodinger training", 20 * 60, schrodinger_training},
      {10, "Airy training", 45 * 60, airy_training},
      {11, "breather sweep and fit", 20 * 60, breather_sweep},
      {12, "soliton sweep", 10 * 60, soliton_sweep},
      {13, "Gaussian pairs", 10 * 60, gaussian_pairs},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto dir = fs::path(output) / ("criterion" + std::to_string(c.id));
    fs::create_directories(dir);
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(dir);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs <= c.budget_seconds;
    const bool pass = o.pass && in_budget;
    failures += !pass;
    std::cout << "criterion " << std::setw(2) << c.id << " " << (pass ? "PASS" : "FAIL") << "  " << c.name << ": "
              << o.detail << " [" << fmt(secs, 3) << " s" << (in_budget ? "" : ", over budget") << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
