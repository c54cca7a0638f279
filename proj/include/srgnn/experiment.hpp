#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "srgnn/trainer.hpp"

namespace srgnn {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Bad config file, unknown key, invalid value, or missing dataset directory.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string dataset;
  std::string output = "out";
  std::uint64_t seed = 0;
  std::size_t repetitions = 20;
  std::size_t jobs = 1;
  std::size_t labels_per_class = 20;
  BiasSpec sampler;
  std::size_t hidden = 32;
  std::size_t gcn_depth = 2;
  std::size_t sgc_k = 2;
  std::size_t appnp_steps = 10;
  double appnp_alpha = 0.1;
  TrainConfig train;
  /// B_u follows 1 / B_l unless set explicitly.
  bool kmm_upper_explicit = false;
  /// Method names from the comparison table; empty = all of them.
  std::vector<std::string> methods;
  std::optional<SweepSpec> sweep;
  std::size_t scan_splits = 100;

  /// Canonical JSON form; also the input of the provenance hash.
  nlohmann::json to_json() const;
  void validate() const;
};

/// Reads the JSON config format. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
/// "appendix": gamma 20, epsilon 0.005. "smoke": 2 repetitions of 30 epochs.
void apply_preset(ExperimentConfig& cfg, const std::string& name);
/// Sets a sweepable parameter: sampler.alpha, sampler.gamma, sampler.epsilon,
/// kmm.b_lower, train.lambda, train.cmd_moments, gcn.depth.
void set_parameter(ExperimentConfig& cfg, const std::string& name, double value);
bool is_sweep_parameter(const std::string& name);

std::vector<MethodSpec> resolve_methods(const ExperimentConfig& cfg);
ComparisonConfig comparison_config(const ExperimentConfig& cfg);

/// "# ..." lines: toolkit version, config hash, seed.
std::string provenance_header(const ExperimentConfig& cfg);

void write_comparison_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<MethodSummary>& rows);

struct ScanRow {
  std::size_t split_id = 0;
  double cmd = 0.0;
  double mmd = 0.0;
  double micro_f1 = 0.0;
};

/// Trains the base GCN on scan_splits biased splits.
std::vector<ScanRow> run_shiftscan(const TrainContext& ctx, const ExperimentConfig& cfg);
void write_shiftscan_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<ScanRow>& rows);

// Subcommands. Each writes into cfg.output and returns a short summary for stdout.
std::string cmd_sample(const ExperimentConfig& cfg, SplitKind kind);
std::string cmd_train(const ExperimentConfig& cfg, const std::string& method, const std::string& split_file);
std::string cmd_compare(const ExperimentConfig& cfg);
std::string cmd_shiftscan(const ExperimentConfig& cfg);
std::string cmd_sweep(const ExperimentConfig& cfg);
std::string cmd_ppr(const ExperimentConfig& cfg, NodeId node, bool exact);
std::string cmd_synth(const std::string& out_dir, std::uint64_t seed, std::size_t nodes, std::size_t classes,
                      std::size_t features);

}  // namespace srgnn
