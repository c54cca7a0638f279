#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "srgnn/experiment.hpp"
#include "support.hpp"

using namespace srgnn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SRGNN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// A small synthetic dataset on disk plus a fast config, shared by the CLI tests.
struct CliFixture {
  testing::TempDir dir{"cli"};
  fs::path data = dir.path() / "data";
  fs::path config = dir.path() / "fast.json";

  CliFixture() {
    REQUIRE(run_cli("synth --out " + data.string() + " --seed 3 --nodes 300 --classes 3 --features 80") == 0);
    std::ofstream(config) << R"({"labels_per_class": 5, "repetitions": 2, "model": {"hidden": 8},
                                "train": {"epochs": 8}, "kmm": {"target_size": 60}})";
  }
  std::string base(const std::string& out) const {
    return "--dataset " + data.string() + " --config " + config.string() + " --out " + (dir.path() / out).string();
  }
};

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config parsing and validation") {
    const auto j = nlohmann::json::parse(R"({"seed": 4, "sampler": {"gamma": 20}, "kmm": {"b_lower": 0.5},
                                             "train": {"lambda": 2.0}, "methods": ["GCN", "SR-GNN"]})");
    const ExperimentConfig c = config_from_json(j);
    CHECK(c.seed == 4);
    CHECK(c.sampler.ppr.gamma == 20);
    CHECK(c.train.kmm_bounds.lower == 0.5);
    CHECK(c.train.kmm_bounds.upper == 2.0);
    CHECK(c.train.lambda == 2.0);
    CHECK(resolve_methods(c).size() == 2);

    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"sede": 1})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"train": {"epoch": 1}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"seed": "x"})")), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ConfigError);

    const auto explicit_upper = config_from_json(nlohmann::json::parse(R"({"kmm": {"b_upper": 3.0, "b_lower": 0.5}})"));
    CHECK(explicit_upper.train.kmm_bounds.upper == 3.0);

    ExperimentConfig bad;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.dataset = "/nonexistent/dataset";
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    testing::TempDir d("cfg");
    ExperimentConfig ok;
    ok.dataset = d.path().string();
    CHECK_NOTHROW(ok.validate());
    ok.methods = {"GAT"};
    CHECK_THROWS_AS(ok.validate(), ConfigError);
    ok.methods.clear();
    ok.sweep = SweepSpec{"train.lambda", {0.0, 1.0}};
    CHECK_NOTHROW(ok.validate());
    ok.sweep = SweepSpec{"train.lr", {0.1}};
    CHECK_THROWS_AS(ok.validate(), ConfigError);
    ok.sweep = SweepSpec{"kmm.b_lower", {2.0}};
    CHECK_THROWS_AS(ok.validate(), ConfigError);
    ok.sweep = SweepSpec{"train.lambda", {}};
    CHECK_THROWS_AS(ok.validate(), ConfigError);
  }

  TEST_CASE("presets and sweep parameters") {
    ExperimentConfig c;
    apply_preset(c, "appendix");
    CHECK(c.sampler.ppr.gamma == 20);
    CHECK(c.sampler.ppr.epsilon == 0.005);
    apply_preset(c, "smoke");
    CHECK(c.repetitions == 2);
    CHECK_THROWS_AS(apply_preset(c, "huge"), ConfigError);

    for (const char* p : {"sampler.alpha", "sampler.gamma", "sampler.epsilon", "kmm.b_lower", "train.lambda",
                          "train.cmd_moments", "gcn.depth"})
      CHECK(is_sweep_parameter(p));
    CHECK_FALSE(is_sweep_parameter("train.epochs"));
    set_parameter(c, "gcn.depth", 4);
    CHECK(c.gcn_depth == 4);
    const auto methods = resolve_methods(c);
    CHECK(methods[0].model.depth() == 4);
    CHECK_THROWS_AS(set_parameter(c, "sampler.gamma", 2.5), ConfigError);
    set_parameter(c, "kmm.b_lower", 0.25);
    CHECK(c.train.kmm_bounds.upper == 4.0);
  }

  TEST_CASE("provenance header ignores jobs and output but not the seed") {
    ExperimentConfig a;
    ExperimentConfig b = a;
    b.jobs = 8;
    b.output = "elsewhere";
    CHECK(provenance_header(a) == provenance_header(b));
    b.seed = 1;
    CHECK(provenance_header(a) != provenance_header(b));
    CHECK(provenance_header(a).rfind("# srgnn 0.1.0\n# config_hash fnv1a64:", 0) == 0);
  }

  TEST_CASE("comparison csv formatting") {
    ExperimentConfig cfg;
    MethodSummary s;
    s.name = "GCN";
    s.micro_mean = 0.5;
    s.micro_std = 0.01;
    s.macro_mean = 0.25;
    s.macro_std = 0.0;
    s.delta_f1 = std::numeric_limits<double>::quiet_NaN();
    std::ostringstream os;
    write_comparison_csv(os, cfg, {s});
    CHECK(os.str().find("method,micro_mean,micro_std,macro_mean,macro_std,delta_f1\n"
                        "GCN,50.0000,1.0000,25.0000,0.0000,n/a\n") != std::string::npos);
  }

  TEST_CASE("cli: exit codes") {
    CHECK(run_cli("") == 1);
    CHECK(run_cli("bogus") == 1);
    CHECK(run_cli("compare") == 1);
    CHECK(run_cli("compare --dataset /nonexistent/dataset") == 1);
    CHECK(run_cli("compare --dataset . --preset nope") == 1);
    CHECK(run_cli("sample --dataset . --kind sideways") == 1);
    CHECK(run_cli("--version") == 0);
    testing::TempDir d("badcfg");
    std::ofstream(d.path() / "c.json") << R"({"unknown_key": 1})";
    CHECK(run_cli("compare --dataset . --config " + (d.path() / "c.json").string()) == 1);
    // A directory that exists but holds no dataset fails at ingest.
    CHECK(run_cli("compare --dataset " + d.path().string()) == 2);
  }

  TEST_CASE("cli: sample, train, ppr") {
    CliFixture fx;
    CHECK(run_cli("sample --kind iid " + fx.base("iid")) == 0);
    CHECK(fs::exists(fx.dir.path() / "iid" / "split_000.json"));
    CHECK(fs::exists(fx.dir.path() / "iid" / "split_001.json"));
    CHECK_FALSE(fs::exists(fx.dir.path() / "iid" / "split_002.json"));
    const auto split = nlohmann::json::parse(slurp(fx.dir.path() / "iid" / "split_000.json"));
    CHECK(split["kind"] == "iid");
    CHECK(split["nodes"].size() == 15);

    CHECK(run_cli("sample --kind biased " + fx.base("biased")) == 0);
    const auto biased = nlohmann::json::parse(slurp(fx.dir.path() / "biased" / "split_001.json"));
    CHECK(biased["kind"] == "biased");

    const std::string split_file = (fx.dir.path() / "biased" / "split_000.json").string();
    CHECK(run_cli("train --method SR-GNN --split " + split_file + " " + fx.base("train")) == 0);
    const auto report = nlohmann::json::parse(slurp(fx.dir.path() / "train" / "report.json"));
    CHECK(report["method"] == "SR-GNN");
    CHECK(report["instance_weights"].size() == 15);
    CHECK(run_cli("train --method GAT " + fx.base("train2")) == 1);

    CHECK(run_cli("ppr --node 5 " + fx.base("ppr")) == 0);
    CHECK(fs::exists(fx.dir.path() / "ppr" / "ppr_5.csv"));
    CHECK(run_cli("ppr --node 100000 " + fx.base("ppr")) == 1);
  }

  TEST_CASE("cli: compare is byte-identical across runs and job counts") {
    CliFixture fx;
    CHECK(run_cli("compare --seed 9 " + fx.base("a")) == 0);
    CHECK(run_cli("compare --seed 9 --jobs 3 " + fx.base("b")) == 0);
    const std::string a = slurp(fx.dir.path() / "a" / "compare.csv");
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(fx.dir.path() / "b" / "compare.csv"));
    CHECK(a.find("# seed 9\n") != std::string::npos);
    CHECK(run_cli("compare --seed 10 --ablation none " + fx.base("c")) == 0);
    const std::string c = slurp(fx.dir.path() / "c" / "compare.csv");
    CHECK(c.find("SR-GNN") == std::string::npos);
    CHECK(c.find("APPNP") != std::string::npos);
  }

  TEST_CASE("cli: shiftscan and sweep") {
    CliFixture fx;
    CHECK(run_cli("shiftscan --reps 1 " + fx.base("one")) == 0);
    const std::string one = slurp(fx.dir.path() / "one" / "shiftscan.csv");
    CHECK(one.find("# pearson_r n/a") != std::string::npos);
    CHECK(run_cli("shiftscan --reps 3 " + fx.base("three")) == 0);
    const std::string three = slurp(fx.dir.path() / "three" / "shiftscan.csv");
    CHECK(three.find("split_id,cmd,mmd,micro_f1\n") != std::string::npos);
    CHECK(three.find("\n2,") != std::string::npos);
    CHECK(three.find("# pearson_r n/a") == std::string::npos);

    CHECK(run_cli("sweep --param train.lr --values 0.1 " + fx.base("sw")) == 1);
    CHECK(run_cli("sweep --param train.lambda --values 0,1 --reps 1 " + fx.base("sw")) == 0);
    const std::string sw = slurp(fx.dir.path() / "sw" / "sweep.csv");
    CHECK(sw.find("train.lambda,0,GCN (IID),") != std::string::npos);
    CHECK(sw.find("train.lambda,1,SR-GNN,") != std::string::npos);
  }
}
