#include "srgnn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "srgnn/rng.hpp"

namespace srgnn {

using nlohmann::json;

namespace {

std::map<int, std::vector<NodeId>> pool_by_class(const Graph& g, std::span<const NodeId> pool) {
  std::map<int, std::vector<NodeId>> out;
  for (NodeId u : pool) {
    if (u >= g.num_nodes()) throw std::out_of_range("sampler: pool node out of range");
    out[g.label(u)].push_back(u);
  }
  return out;
}

}  // namespace

ClassQuota fixed_quota(const Graph& g, std::span<const NodeId> pool, std::size_t per_class) {
  ClassQuota q;
  for (const auto& [c, nodes] : pool_by_class(g, pool)) q[c] = per_class;
  return q;
}

ClassQuota ratio_quota(const Graph& g, std::span<const NodeId> pool, double label_ratio) {
  if (!(label_ratio > 0.0 && label_ratio <= 1.0))
    throw std::invalid_argument("ratio_quota: label ratio must lie in (0, 1]");
  ClassQuota q;
  for (const auto& [c, nodes] : pool_by_class(g, pool))
    q[c] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(label_ratio * static_cast<double>(nodes.size()))));
  return q;
}

void BiasSpec::validate() const {
  ppr.validate();
  if (per_class_quota.empty()) throw std::invalid_argument("bias spec: empty class quota");
  for (const auto& [c, q] : per_class_quota)
    if (q < 1) throw std::invalid_argument("bias spec: every class quota must be at least 1");
  if (max_draws_per_class < 1) throw std::invalid_argument("bias spec: draw budget must be positive");
}

const char* to_string(SplitKind k) { return k == SplitKind::biased ? "biased" : "iid"; }

SplitKind split_kind_from_string(const std::string& s) {
  if (s == "biased") return SplitKind::biased;
  if (s == "iid") return SplitKind::iid;
  throw std::invalid_argument("unknown split kind '" + s + "' (expected biased or iid)");
}

TrainSplit ppr_biased_sample(const Graph& g, const NormalizedAdjacency& adj, std::span<const NodeId> pool,
                             const BiasSpec& spec, const ExactPprTable* exact) {
  spec.validate();
  const std::size_t n = g.num_nodes();
  std::unique_ptr<ExactPprTable> owned;
  const bool use_exact = exact != nullptr || n <= spec.exact_max_nodes;
  if (use_exact && exact == nullptr) {
    owned = std::make_unique<ExactPprTable>(adj, spec.ppr.alpha);
    exact = owned.get();
  }
  if (exact != nullptr && exact->alpha() != spec.ppr.alpha)
    throw std::invalid_argument("ppr_biased_sample: exact table alpha differs from the bias spec");

  std::vector<char> in_pool(n, 0);
  for (NodeId u : pool) in_pool.at(u) = 1;
  const auto candidates = pool_by_class(g, pool);

  std::vector<double> dense;
  auto ranking = [&](NodeId seed) {
    PprVector v;
    if (exact != nullptr) {
      dense.resize(n);
      exact->row(seed, dense);
      v.seed = seed;
      for (NodeId u = 0; u < n; ++u)
        if (dense[u] > 0.0) v.entries.emplace_back(u, dense[u]);
    } else {
      v = push_ppr(adj, seed, spec.ppr);
    }
    return topk_truncate(v, std::max<std::size_t>(1, v.entries.size()));
  };

  TrainSplit split;
  split.kind = SplitKind::biased;
  split.rng_seed = spec.rng_seed;
  std::vector<char> taken(n, 0);

  for (const auto& [c, quota] : spec.per_class_quota) {
    auto it = candidates.find(c);
    if (it == candidates.end() || it->second.size() < quota)
      throw SamplingError("quota unreachable: class " + std::to_string(c) + " has fewer pool nodes than its quota");
    const auto& cand = it->second;
    Rng rng(derive_seed(spec.rng_seed, static_cast<std::uint64_t>(c)));
    std::size_t count = 0;
    std::size_t draws = 0;
    auto take = [&](NodeId u) {
      taken[u] = 1;
      split.nodes.push_back(u);
      ++count;
    };
    while (count < quota) {
      if (draws++ >= spec.max_draws_per_class)
        throw SamplingError("quota unreachable: class " + std::to_string(c) + " filled " + std::to_string(count) +
                            "/" + std::to_string(quota) + " after " + std::to_string(spec.max_draws_per_class) +
                            " seed draws");
      const NodeId seed = cand[uniform_index(rng, cand.size())];
      const auto ranked = ranking(seed);
      if (ranked.size() < spec.ppr.gamma) continue;
      split.seeds_used.push_back(seed);
      if (!taken[seed]) take(seed);
      std::size_t same_label = 0;
      for (const auto& [u, mass] : ranked) {
        if (count >= quota || same_label >= spec.ppr.gamma) break;
        if (u == seed || g.label(u) != c) continue;
        ++same_label;
        if (in_pool[u] && !taken[u]) take(u);
      }
    }
  }

  json quota_json = json::object();
  for (const auto& [c, q] : spec.per_class_quota) quota_json[std::to_string(c)] = q;
  split.params = {{"alpha", spec.ppr.alpha},
                  {"epsilon", spec.ppr.epsilon},
                  {"gamma", spec.ppr.gamma},
                  {"ppr", exact != nullptr ? "exact" : "push"},
                  {"max_draws_per_class", spec.max_draws_per_class},
                  {"quota", quota_json}};
  return split;
}

TrainSplit iid_sample(const Graph& g, std::span<const NodeId> pool, const ClassQuota& quota, std::uint64_t rng_seed) {
  const auto candidates = pool_by_class(g, pool);
  TrainSplit split;
  split.kind = SplitKind::iid;
  split.rng_seed = rng_seed;
  json quota_json = json::object();
  for (const auto& [c, q] : quota) {
    auto it = candidates.find(c);
    const std::size_t have = it == candidates.end() ? 0 : it->second.size();
    if (q > have)
      throw SamplingError("iid sample: quota " + std::to_string(q) + " for class " + std::to_string(c) +
                          " exceeds its " + std::to_string(have) + " pool nodes");
    if (q == 0) continue;
    std::vector<NodeId> cand = it->second;
    Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(c)));
    for (std::size_t i = 0; i < q; ++i) {
      std::swap(cand[i], cand[i + uniform_index(rng, cand.size() - i)]);
      split.nodes.push_back(cand[i]);
    }
    quota_json[std::to_string(c)] = q;
  }
  split.params = {{"quota", quota_json}};
  return split;
}

json to_json(const TrainSplit& s) {
  return json{{"kind", to_string(s.kind)},
              {"rng_seed", s.rng_seed},
              {"params", s.params},
              {"seeds_used", s.seeds_used},
              {"nodes", s.nodes}};
}

TrainSplit train_split_from_json(const json& j) {
  TrainSplit s;
  s.kind = split_kind_from_string(j.at("kind").get<std::string>());
  s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  s.params = j.value("params", json::object());
  s.seeds_used = j.value("seeds_used", std::vector<NodeId>{});
  s.nodes = j.at("nodes").get<std::vector<NodeId>>();
  return s;
}

}  // namespace srgnn
