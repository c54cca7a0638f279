// srgnn: command-line front end for the sampler, trainer and experiment drivers.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "srgnn/experiment.hpp"

namespace {

struct CommonFlags {
  std::string dataset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::string out;
  std::string preset;
  std::optional<std::size_t> reps;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--dataset", f.dataset, "dataset directory");
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--preset", f.preset, "named preset (appendix, smoke)");
  cmd->add_option("--reps", f.reps, "repetitions")->check(CLI::PositiveNumber);
}

// Config file first, then preset, then explicit flags.
srgnn::ExperimentConfig resolve(const CommonFlags& f) {
  srgnn::ExperimentConfig cfg;
  if (!f.config.empty()) cfg = srgnn::load_config(f.config);
  if (!f.preset.empty()) srgnn::apply_preset(cfg, f.preset);
  if (!f.dataset.empty()) cfg.dataset = f.dataset;
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (!f.out.empty()) cfg.output = f.out;
  if (f.reps) {
    cfg.repetitions = *f.reps;
    cfg.scan_splits = *f.reps;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shift-robust semi-supervised node classification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", srgnn::kToolkitVersion);

  CommonFlags common;
  std::string kind = "biased";
  std::string method = "SR-GNN";
  std::string split_file;
  std::string ablation = "all";
  std::string sweep_param;
  std::vector<double> sweep_values;
  std::uint32_t node = 0;
  bool exact = false;
  std::uint64_t synth_seed = 0;
  std::size_t synth_nodes = 2708, synth_classes = 7, synth_features = 1433;
  std::string synth_out;

  auto* sample = app.add_subcommand("sample", "draw training splits");
  add_common(sample, common);
  sample->add_option("--kind", kind, "biased or iid")->check(CLI::IsMember({"biased", "iid"}));

  auto* train = app.add_subcommand("train", "train one method on one split");
  add_common(train, common);
  train->add_option("--method", method, "method name from the comparison table");
  train->add_option("--split", split_file, "split JSON written by 'sample'");

  auto* compare = app.add_subcommand("compare", "biased-vs-IID comparison table");
  add_common(compare, common);
  compare->add_option("--ablation", ablation, "'none' runs the base models only")->check(CLI::IsMember({"all", "none"}));

  auto* scan = app.add_subcommand("shiftscan", "shift versus accuracy over many biased splits");
  add_common(scan, common);

  auto* sweep = app.add_subcommand("sweep", "comparison over a parameter grid");
  add_common(sweep, common);
  sweep->add_option("--param", sweep_param, "parameter name");
  sweep->add_option("--values", sweep_values, "grid values")->delimiter(',');

  auto* ppr = app.add_subcommand("ppr", "top personalized PageRank entries of one node");
  add_common(ppr, common);
  ppr->add_option("--node", node, "seed node")->required();
  ppr->add_flag("--exact", exact, "dense solve instead of local push");

  auto* synth = app.add_subcommand("synth", "write a synthetic citation-style dataset");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--nodes", synth_nodes, "node count")->check(CLI::PositiveNumber);
  synth->add_option("--classes", synth_classes, "class count")->check(CLI::PositiveNumber);
  synth->add_option("--features", synth_features, "vocabulary size")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    std::string summary;
    if (synth->parsed()) {
      summary = srgnn::cmd_synth(synth_out, synth_seed, synth_nodes, synth_classes, synth_features);
    } else {
      srgnn::ExperimentConfig cfg = resolve(common);
      if (sample->parsed()) {
        summary = srgnn::cmd_sample(cfg, srgnn::split_kind_from_string(kind));
      } else if (train->parsed()) {
        summary = srgnn::cmd_train(cfg, method, split_file);
      } else if (compare->parsed()) {
        if (ablation == "none") cfg.methods = {"GCN (IID)", "Feat.+MLP", "GCN", "SGC", "APPNP"};
        summary = srgnn::cmd_compare(cfg);
      } else if (scan->parsed()) {
        summary = srgnn::cmd_shiftscan(cfg);
      } else if (sweep->parsed()) {
        if (!sweep_param.empty()) {
          cfg.sweep = srgnn::SweepSpec{sweep_param, sweep_values};
        }
        summary = srgnn::cmd_sweep(cfg);
      } else if (ppr->parsed()) {
        summary = srgnn::cmd_ppr(cfg, node, exact);
      }
    }
    std::cout << summary;
    if (!summary.empty() && summary.back() != '\n') std::cout << '\n';
    return 0;
  } catch (const srgnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
