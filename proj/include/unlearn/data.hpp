#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/error.hpp"
#include "unlearn/nn.hpp"

namespace unlearn {

// Immutable labelled feature matrix (row-major N x cols).
struct Dataset {
  std::string name;
  std::size_t class_count = 0;
  std::size_t cols = 0;
  std::vector<double> inputs;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * cols, cols);
  }
  // Throws InvalidArgument if empty, non-finite or a label is out of range.
  void validate() const;

  Batch to_batch() const;
  Batch gather(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset&) const = default;
};

struct BlobsSpec {
  std::size_t classes = 2;
  std::size_t per_class = 50;
  std::size_t dim = 2;
  double spread = 0.1;
  std::uint64_t seed = 0;
};

// Isotropic Gaussian clusters. Class means sit on a unit-spaced integer
// lattice (base-s digits of the class id, s = ceil(classes^(1/dim))),
// rotated by a seeded random orthonormal frame. Rows are interleaved by
// class: row i has label i % classes.
Dataset gen_blobs(const BlobsSpec& spec);

struct TrainTest {
  Dataset train;
  Dataset test;
};

// Draws per_class + test_per_class samples per class from the same clusters.
// train is exactly gen_blobs(spec); test holds the extra draws.
TrainTest gen_blobs_with_test(const BlobsSpec& spec, std::size_t test_per_class);

enum class IdxErrorKind { open_failed, bad_magic, truncated, count_mismatch };

class IdxError : public IoError {
 public:
  IdxError(IdxErrorKind kind, const std::string& what)
      : IoError(what), kind_(kind) {}
  IdxErrorKind kind() const { return kind_; }

 private:
  IdxErrorKind kind_;
};

// MNIST-style IDX pair (0x00000803 images, 0x00000801 labels). Pixels are
// scaled by 1/255; class_count is max label + 1.
Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels);
// Inverse of load_idx for features on the k/255 grid; rows are written as a
// single row of `cols` pixels (1 x cols images).
void write_idx(const Dataset& ds, const std::filesystem::path& images,
               const std::filesystem::path& labels);

// CSV with header "label,f0,f1,...".
Dataset load_csv(const std::filesystem::path& path);
void write_csv(const Dataset& ds, const std::filesystem::path& path);

enum class SplitMode { sample_wise, class_wise };

std::string_view to_string(SplitMode m);
SplitMode parse_split_mode(std::string_view name);

struct SplitSpec {
  SplitMode mode = SplitMode::sample_wise;
  std::uint64_t seed = 0;
  double fraction = 0.0;                 // sample_wise
  std::vector<std::uint32_t> classes;    // class_wise
  std::size_t total = 0;                 // N of the dataset it partitions
  std::vector<std::size_t> forget_indices;  // sorted, unique

  // Complement of forget_indices in [0, total), sorted.
  std::vector<std::size_t> retain_indices() const;
};

// sample_wise: floor(fraction * N) indices without replacement;
// fraction must be in (0, 1).
SplitSpec make_sample_split(const Dataset& ds, double fraction,
                            std::uint64_t seed);
// class_wise: every row whose label is listed. Classes must be known.
SplitSpec make_class_split(const Dataset& ds,
                           std::vector<std::uint32_t> classes);

// ceil(p * |forget|) forget indices drawn without replacement, sorted.
std::vector<std::size_t> subsample_forget(const SplitSpec& split, double p,
                                          std::uint64_t seed);

}  // namespace unlearn
