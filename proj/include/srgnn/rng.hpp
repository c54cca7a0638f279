#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace srgnn {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a hash. Stable across platforms; used for stream names and
/// config provenance hashes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Counter-based seed split: stream `index` of `base` never depends on how
/// many other streams were drawn.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);

/// Uniform integer in [0, n). Unbiased (rejection sampling) and independent of
/// the standard library's distribution implementation.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Uniform real in [0, 1) with 53 random bits.
double uniform_unit(Rng& rng);

}  // namespace srgnn
