#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "unlearn/nn.hpp"
#include "unlearn/rng.hpp"

namespace testing_support {

inline unlearn::Batch random_batch(std::size_t rows, std::size_t cols,
                                   std::size_t classes, std::uint64_t seed) {
  unlearn::Rng rng(seed);
  unlearn::Batch b;
  b.cols = cols;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < cols; ++c) b.inputs.push_back(rng.normal());
    b.labels.push_back(static_cast<std::uint32_t>(rng.below(classes)));
  }
  return b;
}

// Parameters spread wider than the init so relu kinks are unlikely to sit
// on top of a finite-difference probe.
inline unlearn::ParamVector random_params(std::size_t d, std::uint64_t seed,
                                          double scale = 0.8) {
  unlearn::Rng rng(seed);
  unlearn::ParamVector p;
  p.values.resize(d);
  for (auto& v : p.values) v = scale * rng.normal();
  return p;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("unlearn_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
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

}  // namespace testing_support
