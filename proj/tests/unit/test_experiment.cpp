#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "strichartz/analysis.hpp"
#include "strichartz/artifacts.hpp"
#include "strichartz/constants.hpp"
#include "strichartz/experiment.hpp"

using namespace strichartz;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("strichartz_experiment_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool has_field(const std::vector<Violation>& vs, const std::string& field, Violation::Severity s) {
  for (const auto& v : vs)
    if (v.field == field && v.severity == s) return true;
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(STRICHARTZ_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& j) {
  const auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

// Small train run that stays cheap.
json tiny_train() {
  return json{{"experiment", "train"},
              {"propagator", "schrodinger"},
              {"grid", {{"R", 10}, {"T", 0.5}, {"N", 64}, {"M", 16}}},
              {"width", 4},
              {"depth", 2},
              {"seeds", {0, 1}},
              {"iterations", 4},
              {"log_every", 2}};
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("kind names round trip") {
    for (const char* name : {"constants", "ratio", "sweep-soliton", "sweep-breather", "hermite-stability", "hermite-opt",
                             "train", "fit-gap", "fit-breather", "crossover"}) {
      const auto k = parse_experiment(name);
      REQUIRE(k.has_value());
      CHECK(std::string(to_string(*k)) == name);
    }
    CHECK_FALSE(parse_experiment("nope").has_value());
  }

  TEST_CASE("default airy config has no violations") {
    for (auto kind : {ExperimentKind::Constants, ExperimentKind::SweepBreather, ExperimentKind::Train,
                      ExperimentKind::HermiteOpt, ExperimentKind::Crossover, ExperimentKind::FitGap}) {
      const auto vs = validate_config(default_config_json(kind));
      CHECK_MESSAGE(vs.empty(), to_string(kind));
    }
    const auto cfg = parse_config(json{{"experiment", "train"}});
    CHECK(cfg.propagator == PropagatorKind::Airy);
    REQUIRE(cfg.gamma.has_value());
    CHECK(*cfg.gamma == doctest::Approx(1.0 / 6));
    CHECK(cfg.seeds.size() == 5);
  }

  TEST_CASE("inadmissible pair is named") {
    const auto vs = validate_config(json{{"experiment", "train"}, {"q", 6}, {"r", 5}});
    REQUIRE(has_field(vs, "q,r", Violation::Severity::Error));
    bool named = false;
    for (const auto& v : vs) named = named || v.message.find("(q,r) = (6,5)") != std::string::npos;
    CHECK(named);
    const auto s = validate_config(json{{"experiment", "train"}, {"propagator", "schrodinger"}, {"q", 6}, {"r", 5}});
    CHECK(has_field(s, "q,r", Violation::Severity::Error));
    CHECK_THROWS_AS(parse_config(json{{"experiment", "train"}, {"q", 6}, {"r", 5}}), ConfigError);
  }

  TEST_CASE("single precision warning") {
    const auto vs = validate_config(json{{"experiment", "train"}, {"q", 12}, {"r", 3}, {"precision", 32}});
    CHECK(has_field(vs, "precision", Violation::Severity::Warning));
    CHECK_FALSE(has_field(vs, "precision", Violation::Severity::Error));
    const auto cfg = parse_config(json{{"experiment", "train"}, {"q", 12}, {"r", 3}, {"precision", 32}});
    CHECK(cfg.precision == Precision::Single);
    CHECK(validate_config(json{{"experiment", "train"}, {"precision", 32}, {"q", 8}, {"r", 4}}).empty());
  }

  TEST_CASE("structural errors") {
    CHECK(has_field(validate_config(json{{"experiment", "train"}, {"seeds", json::array()}}), "seeds",
                    Violation::Severity::Error));
    CHECK(has_field(validate_config(json{{"experiment", "train"}, {"bogus", 1}}), "bogus", Violation::Severity::Error));
    CHECK(has_field(validate_config(json{{"experiment", "train"}, {"grid", {{"Q", 1}}}}), "grid.Q",
                    Violation::Severity::Error));
    CHECK(has_field(validate_config(json{{"experiment", "ratio"}}), "profile", Violation::Severity::Error));
    CHECK(has_field(validate_config(json{{"experiment", "sweep-breather"}, {"propagator", "schrodinger"}}),
                    "propagator", Violation::Severity::Error));
    CHECK(has_field(validate_config(json{{"experiment", "constants"}, {"pairs", {{6, 5}}}}), "pairs",
                    Violation::Severity::Error));
    CHECK(has_field(validate_config(json{{"experiment", "sweep-soliton"}, {"params", {1, -2}}}), "params",
                    Violation::Severity::Error));
    CHECK(has_field(validate_config(json{{"experiment", "train"}, {"precision", 16}}), "precision",
                    Violation::Severity::Error));
    CHECK(has_field(validate_config(json{{"q", 6}}), "experiment", Violation::Severity::Error));
    CHECK_FALSE(validate_config(json::array()).empty());
    // Several problems are all reported at once.
    const auto many = validate_config(json{{"experiment", "train"}, {"seeds", json::array()}, {"ridge", -1}});
    CHECK(has_field(many, "seeds", Violation::Severity::Error));
    CHECK(has_field(many, "ridge", Violation::Severity::Error));
  }

  TEST_CASE("config file parse errors") {
    const auto dir = scratch("parse");
    std::ofstream(dir / "bad.json") << "{ \"experiment\": ";
    CHECK_THROWS_AS(read_config_file(dir / "bad.json"), ConfigError);
    CHECK_THROWS_AS(read_config_file(dir / "missing.json"), ConfigError);
    std::ofstream(dir / "comment.json") << "{\n  // constants table\n  \"experiment\": \"constants\"\n}\n";
    CHECK(read_config_file(dir / "comment.json")["experiment"] == "constants");
    fs::remove_all(dir);
  }

  TEST_CASE("constants run") {
    const auto dir = scratch("constants");
    auto cfg = parse_config(json{{"experiment", "constants"}});
    cfg.output_dir = dir;
    std::ostringstream log;
    const auto summary = run_experiment(cfg, log);
    const auto t = read_csv(dir / "constants.csv");
    REQUIRE(t.rows.size() == 4);
    const auto tA = t.numbers("tilde_A");
    const double expected[] = {0.79258583416881710468, 0.78862647946964601352, 0.81119480180548878466,
                               0.85555934325409873911};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(tA[i] - expected[i]) < 1e-12);
    CHECK(std::abs(t.numbers("tilde_S")[1] - 0.81295822530027007) < 1e-14);
    std::ifstream in(summary.manifest);
    const auto m = json::parse(in);
    CHECK(m["experiment"] == "constants");
    CHECK(m["artifacts"][0]["path"] == "constants.csv");
    CHECK(m["config_hash"] == config_hash(m["config"]));
    CHECK_FALSE(m["config"].contains("output_dir"));
    fs::remove_all(dir);
  }

  TEST_CASE("reruns are byte identical") {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    for (const auto& dir : {a, b}) {
      auto cfg = parse_config(tiny_train());
      cfg.output_dir = dir;
      std::ostringstream log;
      run_experiment(cfg, log);
    }
    for (const char* name : {"history_seed0.csv", "history_seed1.csv", "profile_seed0.csv", "checkpoint_seed1.json"}) {
      REQUIRE(fs::exists(a / name));
      CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);
    }
    const auto h = read_csv(a / "history_seed0.csv");
    CHECK(h.header == std::vector<std::string>{"iteration", "constant", "loss", "boundary", "ridge", "lr"});
    CHECK(h.numbers("iteration") == std::vector<double>{0, 2, 4});
    std::ifstream ma(a / "manifest.json"), mb(b / "manifest.json");
    const auto ja = json::parse(ma), jb = json::parse(mb);
    CHECK(ja["config_hash"] == jb["config_hash"]);
    // Run metadata records wall-clock time; every other artifact must match.
    REQUIRE(ja["artifacts"].size() == jb["artifacts"].size());
    for (std::size_t i = 0; i < ja["artifacts"].size(); ++i)
      if (ja["artifacts"][i]["kind"] != "metadata") CHECK(ja["artifacts"][i] == jb["artifacts"][i]);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("fit-gap reads a sweep table and reports crossings") {
    const auto dir = scratch("fitgap");
    {
      CsvWriter w(dir / "sweep.csv", {"parameter", "ratio", "reference", "gap", "resolved_fraction"});
      for (double a : {2.0, 3.0, 4.0, 6.0, 8.0}) w.row({a, 0.7, 0.7 + 0.3 / a, 0.3 / a, 1.0});
    }
    auto cfg = parse_config(json{{"experiment", "fit-gap"}, {"input", (dir / "sweep.csv").string()}});
    cfg.output_dir = dir / "out";
    std::ostringstream log;
    run_experiment(cfg, log);
    const auto txt = slurp(dir / "out" / "fit_gap.txt");
    CHECK(txt.find("status = ok") != std::string::npos);
    CHECK(txt.find("kappa = 1") != std::string::npos);

    {
      CsvWriter w(dir / "crossing.csv", {"parameter", "ratio", "reference", "gap", "resolved_fraction"});
      for (double a : {2.0, 3.0, 4.0}) w.row({a, 0.7, 0.7, a == 3.0 ? -1e-3 : 0.1, 1.0});
    }
    auto bad = parse_config(json{{"experiment", "fit-gap"}, {"input", (dir / "crossing.csv").string()}});
    bad.output_dir = dir / "out2";
    CHECK_THROWS_AS(run_experiment(bad, log), BoundCrossing);
    CHECK(slurp(dir / "out2" / "fit_gap.txt").find("status = bound-crossing") != std::string::npos);
    CHECK(fs::exists(dir / "out2" / "manifest.json"));
    fs::remove_all(dir);
  }

  TEST_CASE("cli exit codes") {
    const auto dir = scratch("cli");
    const auto out = (dir / "out").string();
    CHECK(cli("template constants") == 0);
    CHECK(cli("template nope") == 2);
    CHECK(cli("validate " + write_config(dir, "ok.json", json{{"experiment", "constants"}}).string()) == 0);
    CHECK(cli("validate " + write_config(dir, "bad.json", json{{"experiment", "train"}, {"q", 6}, {"r", 5}}).string()) ==
          2);
    CHECK(cli("validate " + (dir / "absent.json").string()) == 2);
    CHECK(cli("run " + (dir / "ok.json").string() + " -o " + out) == 0);
    CHECK(fs::exists(dir / "out" / "constants.csv"));
    const auto train = write_config(dir, "train.json", tiny_train()).string();
    CHECK(cli("run " + train + " --seeds '' -o " + out) == 2);
    CHECK(cli("run " + train + " --set ridge=1e308 --seeds 0 -o " + out) == 3);
    CHECK(fs::exists(dir / "out" / "checkpoint_seed0.json"));
    {
      CsvWriter w(dir / "crossing.csv", {"parameter", "gap"});
      for (double a : {2.0, 3.0, 4.0}) w.row({a, a == 3.0 ? -1e-3 : 0.1});
    }
    const auto gap =
        write_config(dir, "gap.json", json{{"experiment", "fit-gap"}, {"input", (dir / "crossing.csv").string()}});
    CHECK(cli("run " + gap.string() + " -o " + out) == 4);
    CHECK(cli("run " + (dir / "ok.json").string() + " --bogus") == 2);
    fs::remove_all(dir);
  }
}
