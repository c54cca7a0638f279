#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "srgnn/graph.hpp"
#include "srgnn/ppr.hpp"

namespace srgnn {

using ClassQuota = std::map<int, std::size_t>;

/// `per_class` nodes for every class present in the pool.
ClassQuota fixed_quota(const Graph& g, std::span<const NodeId> pool, std::size_t per_class);
/// round(label_ratio * |pool of class c|), at least 1, per class present in the pool.
ClassQuota ratio_quota(const Graph& g, std::span<const NodeId> pool, double label_ratio);

struct BiasSpec {
  PprParams ppr;
  ClassQuota per_class_quota;
  std::uint64_t rng_seed = 0;
  std::size_t max_draws_per_class = 10'000;
  /// Graphs up to this many nodes rank neighbors by exact PPR; larger ones use push.
  std::size_t exact_max_nodes = 5'000;

  void validate() const;
};

enum class SplitKind { biased, iid };

const char* to_string(SplitKind k);
SplitKind split_kind_from_string(const std::string& s);

struct TrainSplit {
  std::vector<NodeId> nodes;
  SplitKind kind = SplitKind::iid;
  std::vector<NodeId> seeds_used;
  std::uint64_t rng_seed = 0;
  nlohmann::json params = nlohmann::json::object();
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Biased sampler: per class, draw random seeds of that class from the pool and
/// add each accepted seed together with its highest-ranked same-label PPR
/// neighbors in the pool until the quota is met exactly. A seed is accepted when
/// its PPR vector has at least gamma nonzero entries.
///
/// `exact` supplies exact PPR rows (alpha must match spec.ppr.alpha); when null
/// and the graph is within spec.exact_max_nodes, a table is built on the fly.
TrainSplit ppr_biased_sample(const Graph& g, const NormalizedAdjacency& adj, std::span<const NodeId> pool,
                             const BiasSpec& spec, const ExactPprTable* exact = nullptr);

/// Uniform per-class sample without replacement from the pool.
TrainSplit iid_sample(const Graph& g, std::span<const NodeId> pool, const ClassQuota& quota,
                      std::uint64_t rng_seed);

nlohmann::json to_json(const TrainSplit& s);
TrainSplit train_split_from_json(const nlohmann::json& j);

}  // namespace srgnn
