#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <tbb/global_control.h>

#include "CLI11.hpp"
#include "strichartz/analysis.hpp"
#include "strichartz/experiment.hpp"

namespace {

using nlohmann::json;
using namespace strichartz;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitBoundCrossing = 4;

struct Overrides {
  std::optional<std::string> output_dir;
  std::optional<std::string> seeds;
  std::optional<long long> iterations;
  std::optional<int> precision;
  std::vector<std::string> sets;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--output-dir,-o", o.output_dir, "Directory for artifacts");
  cmd->add_option("--seeds", o.seeds, "Comma-separated seed list (empty string for none)");
  cmd->add_option("--iterations", o.iterations, "Iteration budget");
  cmd->add_option("--precision", o.precision, "Forward precision, 32 or 64");
  cmd->add_option("--set", o.sets, "Override any key: dotted.key=json-value");
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

void apply_overrides(json& doc, const Overrides& o) {
  if (!doc.is_object()) return;
  if (o.output_dir) doc["output_dir"] = *o.output_dir;
  if (o.iterations) doc["iterations"] = *o.iterations;
  if (o.precision) doc["precision"] = *o.precision;
  if (o.seeds) {
    json list = json::array();
    std::string item;
    for (char c : *o.seeds + ",") {
      if (c == ',') {
        if (!item.empty()) list.push_back(parse_value(item));
        item.clear();
      } else if (c != ' ') {
        item += c;
      }
    }
    doc["seeds"] = list;
  }
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError({{Violation::Severity::Error, s, "--set expects key=value"}});
    json* node = &doc;
    std::string key = s.substr(0, eq);
    for (auto dot = key.find('.'); dot != std::string::npos; dot = key.find('.')) {
      json& next = (*node)[key.substr(0, dot)];
      if (!next.is_object()) next = json::object();
      node = &next;
      key = key.substr(dot + 1);
    }
    (*node)[key] = parse_value(s.substr(eq + 1));
  }
}

std::unique_ptr<tbb::global_control> thread_limit(std::optional<int> flag) {
  std::optional<int> n = flag;
  if (!n) {
    if (const char* env = std::getenv("STRICHARTZ_THREADS")) {
      try {
        n = std::stoi(env);
      } catch (const std::exception&) {
        std::cerr << "ignoring STRICHARTZ_THREADS=" << env << '\n';
      }
    }
  }
  if (!n || *n < 1) return nullptr;
  return std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                               static_cast<std::size_t>(*n));
}

int print_violations(const std::vector<Violation>& vs) {
  bool errors = false;
  for (const auto& v : vs) {
    std::cerr << describe(v) << '\n';
    errors = errors || v.severity == Violation::Severity::Error;
  }
  return errors ? kExitConfig : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for sharp Strichartz and Airy-Strichartz constants"};
  app.require_subcommand(1);
  std::optional<int> threads;
  app.add_option("--threads", threads, "Worker threads (default: STRICHARTZ_THREADS or all cores)");

  std::string run_path, check_path, kind_name;
  Overrides run_over, check_over;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", run_path, "JSON config file")->required();
  add_override_flags(run, run_over);
  auto* check = app.add_subcommand("validate", "Check a config and list violations");
  check->add_option("config", check_path, "JSON config file")->required();
  add_override_flags(check, check_over);
  auto* tmpl = app.add_subcommand("template", "Print a config with every default filled in");
  tmpl->add_option("experiment", kind_name, "Experiment kind")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  auto limit = thread_limit(threads);

  try {
    if (*tmpl) {
      const auto kind = parse_experiment(kind_name);
      if (!kind) {
        std::cerr << "unknown experiment kind '" << kind_name << "'\n";
        return kExitConfig;
      }
      std::cout << default_config_json(*kind).dump(2) << '\n';
      return 0;
    }
    if (*check) {
      json doc = read_config_file(check_path);
      apply_overrides(doc, check_over);
      const auto vs = validate_config(doc);
      if (vs.empty()) std::cout << "ok\n";
      return print_violations(vs);
    }
    json doc = read_config_file(run_path);
    apply_overrides(doc, run_over);
    auto outcome = analyse_config(doc);
    if (print_violations(outcome.violations) != 0) return kExitConfig;
    const auto summary = run_experiment(*outcome.config, std::cout);
    std::cout << "manifest " << summary.manifest.string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    print_violations(e.violations);
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const BoundCrossing& e) {
    std::cerr << "bound crossed: " << e.what() << '\n';
    return kExitBoundCrossing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
