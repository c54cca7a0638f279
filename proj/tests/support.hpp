#pragma once
// Shared fixtures for the unit tests.

#include <filesystem>
#include <string>

#include "srgnn/graph.hpp"
#include "srgnn/matrix.hpp"
#include "srgnn/rng.hpp"

namespace testing {

inline srgnn::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -1.0,
                                   double hi = 1.0) {
  srgnn::Rng rng(seed);
  srgnn::Matrix m(r, c);
  for (double& v : m.values()) v = lo + (hi - lo) * srgnn::uniform_unit(rng);
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("srgnn-" + tag + "-" + std::to_string(srgnn::splitmix64(reinterpret_cast<std::uintptr_t>(this))));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
