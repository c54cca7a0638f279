#include "srgnn/experiment.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "srgnn/synthetic.hpp"

namespace srgnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string percent(double v) { return std::isnan(v) ? "n/a" : fmt("%.4f", 100.0 * v); }

std::string number(double v) { return std::isnan(v) ? "n/a" : fmt("%.10g", v); }

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

struct LoadedDataset {
  Dataset data;
  std::unique_ptr<TrainContext> ctx;
};

std::unique_ptr<LoadedDataset> load(const ExperimentConfig& cfg) {
  auto out = std::make_unique<LoadedDataset>();
  out->data = ingest_dataset(cfg.dataset);
  out->ctx = std::make_unique<TrainContext>(out->data);
  return out;
}

ModelSpec base_gcn(const ExperimentConfig& cfg) {
  ModelSpec s{ModelKind::gcn, {}};
  s.set_depth(cfg.gcn_depth, cfg.hidden);
  return s;
}

}  // namespace

json ExperimentConfig::to_json() const {
  json j;
  j["dataset"] = dataset;
  j["seed"] = seed;
  j["repetitions"] = repetitions;
  j["labels_per_class"] = labels_per_class;
  j["sampler"] = {{"alpha", sampler.ppr.alpha},
                  {"epsilon", sampler.ppr.epsilon},
                  {"gamma", sampler.ppr.gamma},
                  {"max_draws_per_class", sampler.max_draws_per_class},
                  {"exact_max_nodes", sampler.exact_max_nodes}};
  j["model"] = {{"hidden", hidden},           {"gcn_depth", gcn_depth},     {"sgc_k", sgc_k},
                {"appnp_steps", appnp_steps}, {"appnp_alpha", appnp_alpha}};
  j["train"] = {{"lambda", train.lambda},
                {"epochs", train.epochs},
                {"lr", train.lr},
                {"weight_decay", train.weight_decay},
                {"dropout", train.dropout},
                {"cmd_moments", train.cmd_moments},
                {"iid_reg_sample_size", train.iid_reg_sample_size},
                {"resample_iid", train.resample_iid_each_epoch}};
  j["kmm"] = {{"b_lower", train.kmm_bounds.lower},
              {"target_size", train.kmm_target_size},
              {"distance", train.kernel.distance == KernelDistance::squared ? "squared" : "euclidean"}};
  if (kmm_upper_explicit) j["kmm"]["b_upper"] = train.kmm_bounds.upper;
  j["methods"] = methods;
  if (sweep) j["sweep"] = {{"parameter", sweep->parameter}, {"values", sweep->values}};
  j["shiftscan"] = {{"splits", scan_splits}};
  // jobs and output are left out: they never change results.
  return j;
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("no dataset directory given");
  if (!fs::is_directory(dataset)) throw ConfigError("dataset directory '" + dataset + "' does not exist");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (labels_per_class < 1) throw ConfigError("labels_per_class must be at least 1");
  if (hidden < 1) throw ConfigError("model.hidden must be at least 1");
  if (gcn_depth < 1) throw ConfigError("model.gcn_depth must be at least 1");
  try {
    sampler.ppr.validate();
    train.validate();
    ModelSpec probe{ModelKind::appnp, {hidden}, appnp_steps, appnp_alpha, sgc_k};
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (sampler.max_draws_per_class < 1) throw ConfigError("sampler.max_draws_per_class must be at least 1");
  resolve_methods(*this);
  if (sweep) {
    if (!is_sweep_parameter(sweep->parameter)) throw ConfigError("unknown sweep parameter '" + sweep->parameter + "'");
    if (sweep->values.empty()) throw ConfigError("sweep grid is empty");
    for (double v : sweep->values) {
      ExperimentConfig probe = *this;
      set_parameter(probe, sweep->parameter, v);
      probe.sweep.reset();
      probe.validate();
    }
  }
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig cfg) {
  try {
    check_keys(j, {"dataset", "output", "seed", "repetitions", "jobs", "labels_per_class", "sampler", "model", "train",
                   "kmm", "methods", "sweep", "shiftscan"},
               "");
    read(j, "dataset", cfg.dataset);
    read(j, "output", cfg.output);
    read(j, "seed", cfg.seed);
    read(j, "repetitions", cfg.repetitions);
    read(j, "jobs", cfg.jobs);
    read(j, "labels_per_class", cfg.labels_per_class);
    if (j.contains("sampler")) {
      const json& s = j["sampler"];
      check_keys(s, {"alpha", "epsilon", "gamma", "max_draws_per_class", "exact_max_nodes"}, "sampler");
      read(s, "alpha", cfg.sampler.ppr.alpha);
      read(s, "epsilon", cfg.sampler.ppr.epsilon);
      read(s, "gamma", cfg.sampler.ppr.gamma);
      read(s, "max_draws_per_class", cfg.sampler.max_draws_per_class);
      read(s, "exact_max_nodes", cfg.sampler.exact_max_nodes);
    }
    if (j.contains("model")) {
      const json& m = j["model"];
      check_keys(m, {"hidden", "gcn_depth", "sgc_k", "appnp_steps", "appnp_alpha"}, "model");
      read(m, "hidden", cfg.hidden);
      read(m, "gcn_depth", cfg.gcn_depth);
      read(m, "sgc_k", cfg.sgc_k);
      read(m, "appnp_steps", cfg.appnp_steps);
      read(m, "appnp_alpha", cfg.appnp_alpha);
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      check_keys(t, {"lambda", "epochs", "lr", "weight_decay", "dropout", "cmd_moments", "iid_reg_sample_size",
                     "resample_iid"},
                 "train");
      read(t, "lambda", cfg.train.lambda);
      read(t, "epochs", cfg.train.epochs);
      read(t, "lr", cfg.train.lr);
      read(t, "weight_decay", cfg.train.weight_decay);
      read(t, "dropout", cfg.train.dropout);
      read(t, "cmd_moments", cfg.train.cmd_moments);
      read(t, "iid_reg_sample_size", cfg.train.iid_reg_sample_size);
      read(t, "resample_iid", cfg.train.resample_iid_each_epoch);
    }
    if (j.contains("kmm")) {
      const json& k = j["kmm"];
      check_keys(k, {"b_lower", "b_upper", "target_size", "distance"}, "kmm");
      if (k.contains("b_lower")) set_parameter(cfg, "kmm.b_lower", k["b_lower"].get<double>());
      if (k.contains("b_upper")) {
        cfg.train.kmm_bounds.upper = k["b_upper"].get<double>();
        cfg.kmm_upper_explicit = true;
      }
      read(k, "target_size", cfg.train.kmm_target_size);
      if (k.contains("distance")) {
        const auto d = k["distance"].get<std::string>();
        if (d == "euclidean") cfg.train.kernel.distance = KernelDistance::euclidean;
        else if (d == "squared") cfg.train.kernel.distance = KernelDistance::squared;
        else throw ConfigError("kmm.distance must be 'euclidean' or 'squared'");
      }
    }
    if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      check_keys(s, {"parameter", "values"}, "sweep");
      cfg.sweep = SweepSpec{s.at("parameter").get<std::string>(), s.at("values").get<std::vector<double>>()};
    }
    if (j.contains("shiftscan")) {
      check_keys(j["shiftscan"], {"splits"}, "shiftscan");
      read(j["shiftscan"], "splits", cfg.scan_splits);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j, std::move(base));
}

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
  if (name == "appendix") {
    const PprParams p = PprParams::appendix();
    cfg.sampler.ppr.gamma = p.gamma;
    cfg.sampler.ppr.epsilon = p.epsilon;
  } else if (name == "smoke") {
    cfg.repetitions = 2;
    cfg.train.epochs = 30;
    cfg.scan_splits = 4;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
}

bool is_sweep_parameter(const std::string& name) {
  static const std::set<std::string> names{"sampler.alpha", "sampler.gamma", "sampler.epsilon", "kmm.b_lower",
                                           "train.lambda",  "train.cmd_moments", "gcn.depth"};
  return names.count(name) > 0;
}

void set_parameter(ExperimentConfig& cfg, const std::string& name, double value) {
  auto count = [&](const char* what) {
    if (!(value >= 0.0) || value != std::floor(value)) throw ConfigError(std::string(what) + " must be a whole number");
    return static_cast<std::size_t>(value);
  };
  if (name == "sampler.alpha") cfg.sampler.ppr.alpha = value;
  else if (name == "sampler.gamma") cfg.sampler.ppr.gamma = count("sampler.gamma");
  else if (name == "sampler.epsilon") cfg.sampler.ppr.epsilon = value;
  else if (name == "kmm.b_lower") {
    if (!(value > 0.0)) throw ConfigError("kmm.b_lower must be positive");
    cfg.train.kmm_bounds.lower = value;
    if (!cfg.kmm_upper_explicit) cfg.train.kmm_bounds.upper = 1.0 / value;
  } else if (name == "train.lambda") cfg.train.lambda = value;
  else if (name == "train.cmd_moments") cfg.train.cmd_moments = count("train.cmd_moments");
  else if (name == "gcn.depth") cfg.gcn_depth = count("gcn.depth");
  else throw ConfigError("unknown parameter '" + name + "'");
}

std::vector<MethodSpec> resolve_methods(const ExperimentConfig& cfg) {
  auto all = comparison_methods(cfg.hidden);
  for (auto& m : all) {
    if (m.model.kind == ModelKind::gcn) m.model.set_depth(cfg.gcn_depth, cfg.hidden);
    m.model.sgc_k = cfg.sgc_k;
    m.model.appnp_steps = cfg.appnp_steps;
    m.model.appnp_alpha = cfg.appnp_alpha;
  }
  if (cfg.methods.empty()) return all;
  for (const auto& name : cfg.methods)
    if (std::none_of(all.begin(), all.end(), [&](const MethodSpec& m) { return m.name == name; }))
      throw ConfigError("unknown method '" + name + "'");
  std::vector<MethodSpec> out;
  for (auto& m : all)
    if (std::find(cfg.methods.begin(), cfg.methods.end(), m.name) != cfg.methods.end()) out.push_back(m);
  return out;
}

ComparisonConfig comparison_config(const ExperimentConfig& cfg) {
  ComparisonConfig c;
  c.sampler = cfg.sampler;
  c.labels_per_class = cfg.labels_per_class;
  c.repetitions = cfg.repetitions;
  c.master_seed = cfg.seed;
  c.train = cfg.train;
  c.methods = resolve_methods(cfg);
  c.jobs = cfg.jobs;
  return c;
}

std::string provenance_header(const ExperimentConfig& cfg) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, fnv1a64(cfg.to_json().dump()));
  std::ostringstream os;
  os << "# srgnn " << kToolkitVersion << "\n# config_hash fnv1a64:" << hash << "\n# seed " << cfg.seed << '\n';
  return os.str();
}

void write_comparison_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<MethodSummary>& rows) {
  os << provenance_header(cfg);
  os << "method,micro_mean,micro_std,macro_mean,macro_std,delta_f1\n";
  for (const auto& r : rows)
    os << r.name << ',' << percent(r.micro_mean) << ',' << percent(r.micro_std) << ',' << percent(r.macro_mean) << ','
       << percent(r.macro_std) << ',' << percent(r.delta_f1) << '\n';
}

std::vector<ScanRow> run_shiftscan(const TrainContext& ctx, const ExperimentConfig& cfg) {
  const ComparisonConfig cc = comparison_config(cfg);
  const ModelSpec gcn = base_gcn(cfg);
  std::vector<ScanRow> rows(cfg.scan_splits);
  if (ctx.graph().num_nodes() <= cfg.sampler.exact_max_nodes) ctx.ppr_table(cfg.sampler.ppr.alpha);
  parallel_for(cfg.scan_splits, cfg.jobs, [&](std::size_t i) {
    const TrainSplit split = comparison_split(ctx, cc, i, SplitKind::biased);
    TrainConfig tc = cfg.train;
    tc.use_cmd_reg = false;
    tc.use_instance_reweight = false;
    tc.rng_seed = derive_seed(derive_seed(cfg.seed, i), "train");
    const TrainReport r = train(ctx, split, gcn, tc).report;
    rows[i] = {i, r.cmd_final, r.mmd_final, r.micro_f1};
  });
  return rows;
}

void write_shiftscan_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<ScanRow>& rows) {
  os << provenance_header(cfg);
  os << "split_id,cmd,mmd,micro_f1\n";
  std::vector<double> c, f;
  for (const auto& r : rows) {
    os << r.split_id << ',' << number(r.cmd) << ',' << number(r.mmd) << ',' << number(r.micro_f1) << '\n';
    c.push_back(r.cmd);
    f.push_back(r.micro_f1);
  }
  os << "# pearson_r " << number(pearson(c, f)) << '\n';
}

std::string cmd_sample(const ExperimentConfig& cfg, SplitKind kind) {
  cfg.validate();
  const auto ds = load(cfg);
  const ComparisonConfig cc = comparison_config(cfg);
  std::vector<TrainSplit> splits(cfg.repetitions);
  if (kind == SplitKind::biased && ds->data.graph.num_nodes() <= cfg.sampler.exact_max_nodes)
    ds->ctx->ppr_table(cfg.sampler.ppr.alpha);
  parallel_for(cfg.repetitions, cfg.jobs, [&](std::size_t r) { splits[r] = comparison_split(*ds->ctx, cc, r, kind); });
  for (std::size_t r = 0; r < splits.size(); ++r) {
    char name[32];
    std::snprintf(name, sizeof name, "split_%03zu.json", r);
    json j = to_json(splits[r]);
    j["provenance"] = provenance_header(cfg);
    write_file(fs::path(cfg.output) / name, j.dump(2) + "\n");
  }
  return "wrote " + std::to_string(splits.size()) + " " + to_string(kind) + " splits to " + cfg.output;
}

std::string cmd_train(const ExperimentConfig& cfg, const std::string& method_name, const std::string& split_file) {
  cfg.validate();
  ExperimentConfig one = cfg;
  one.methods = {method_name};
  const MethodSpec method = resolve_methods(one).at(0);
  const auto ds = load(cfg);
  const ComparisonConfig cc = comparison_config(one);
  TrainSplit split;
  if (split_file.empty()) {
    split = comparison_split(*ds->ctx, cc, 0, method.split);
  } else {
    std::ifstream f(split_file);
    if (!f) throw ConfigError("cannot open split file '" + split_file + "'");
    try {
      split = train_split_from_json(json::parse(f));
    } catch (const json::exception& e) {
      throw ConfigError("split file '" + split_file + "': " + e.what());
    }
  }
  TrainConfig tc = cfg.train;
  tc.rng_seed = derive_seed(derive_seed(cfg.seed, 0), "train");
  tc.use_cmd_reg = method.cmd_reg;
  tc.use_instance_reweight = method.reweight;
  std::vector<double> beta;
  if (method.reweight)
    beta = compute_instance_weights(*ds->ctx, split, method.model, tc, derive_seed(derive_seed(cfg.seed, 0), "kmm-target"))
               .beta;
  const TrainReport report = train(*ds->ctx, split, method.model, tc, beta).report;
  json j = to_json(report);
  j["method"] = method.name;
  j["provenance"] = provenance_header(cfg);
  if (!beta.empty()) {
    json w = json::object();
    for (std::size_t i = 0; i < beta.size(); ++i) w[std::to_string(split.nodes[i])] = beta[i];
    j["instance_weights"] = w;
  }
  write_file(fs::path(cfg.output) / "report.json", j.dump(2) + "\n");
  return method.name + ": micro_f1 " + percent(report.micro_f1) + ", macro_f1 " + percent(report.macro_f1) +
         ", cmd_final " + number(report.cmd_final);
}

std::string cmd_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto ds = load(cfg);
  const auto rows = run_comparison(*ds->ctx, comparison_config(cfg));
  std::ostringstream csv;
  write_comparison_csv(csv, cfg, rows);
  write_file(fs::path(cfg.output) / "compare.csv", csv.str());
  json j = json::array();
  for (const auto& r : rows) {
    json runs = json::array();
    for (const auto& run : r.runs) runs.push_back(to_json(run));
    j.push_back({{"method", r.name}, {"runs", runs}});
  }
  write_file(fs::path(cfg.output) / "compare.json", j.dump(2) + "\n");
  return csv.str();
}

std::string cmd_shiftscan(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto ds = load(cfg);
  const auto rows = run_shiftscan(*ds->ctx, cfg);
  std::ostringstream csv;
  write_shiftscan_csv(csv, cfg, rows);
  write_file(fs::path(cfg.output) / "shiftscan.csv", csv.str());
  std::vector<double> c, f;
  for (const auto& r : rows) {
    c.push_back(r.cmd);
    f.push_back(r.micro_f1);
  }
  return "pearson_r " + number(pearson(c, f)) + " over " + std::to_string(rows.size()) + " splits";
}

std::string cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.sweep) throw ConfigError("sweep needs a parameter and a value grid");
  const auto ds = load(cfg);
  std::ostringstream csv;
  csv << provenance_header(cfg);
  csv << "parameter,value,method,micro_mean,micro_std,macro_mean,macro_std,delta_f1,cmd_mean\n";
  for (double v : cfg.sweep->values) {
    ExperimentConfig point = cfg;
    set_parameter(point, cfg.sweep->parameter, v);
    for (const auto& r : run_comparison(*ds->ctx, comparison_config(point)))
      csv << cfg.sweep->parameter << ',' << number(v) << ',' << r.name << ',' << percent(r.micro_mean) << ','
          << percent(r.micro_std) << ',' << percent(r.macro_mean) << ',' << percent(r.macro_std) << ','
          << percent(r.delta_f1) << ',' << number(r.cmd_mean) << '\n';
  }
  write_file(fs::path(cfg.output) / "sweep.csv", csv.str());
  return csv.str();
}

std::string cmd_ppr(const ExperimentConfig& cfg, NodeId node, bool exact) {
  cfg.validate();
  const auto ds = load(cfg);
  const Graph& g = ds->data.graph;
  if (node >= g.num_nodes()) throw ConfigError("node " + std::to_string(node) + " is out of range");
  const PprVector v =
      exact ? exact_ppr(ds->ctx->adjacency(), node, cfg.sampler.ppr.alpha) : push_ppr(ds->ctx->adjacency(), node, cfg.sampler.ppr);
  const auto top = topk_truncate(v, cfg.sampler.ppr.gamma);
  std::ostringstream csv;
  csv << provenance_header(cfg) << "node,mass,label\n";
  for (const auto& [u, mass] : top) csv << u << ',' << number(mass) << ',' << g.label(u) << '\n';
  write_file(fs::path(cfg.output) / ("ppr_" + std::to_string(node) + ".csv"), csv.str());
  return csv.str();
}

std::string cmd_synth(const std::string& out_dir, std::uint64_t seed, std::size_t nodes, std::size_t classes,
                      std::size_t features) {
  synthetic::CitationLikeParams p;
  p.num_nodes = nodes;
  p.num_classes = classes;
  p.num_features = features;
  if (nodes < 4 * classes) throw ConfigError("synth: too few nodes for the class count");
  p.valid_size = std::min(p.valid_size, nodes / 5);
  p.test_size = std::min(p.test_size, nodes * 2 / 5);
  const Dataset d = synthetic::citation_like(p, seed);
  const json meta{{"name", "synthetic"}, {"generator", "citation_like"}, {"seed", seed}};
  write_dataset(out_dir, d.graph, d.split, meta.dump());
  return "wrote synthetic dataset (" + std::to_string(d.graph.num_nodes()) + " nodes, " +
         std::to_string(d.graph.num_edges()) + " edges) to " + out_dir;
}

}  // namespace srgnn
