#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "unlearn/nn.hpp"

namespace unlearn {

// Binary model checkpoint, all integers and floats little-endian:
//
//   offset  size      field
//   0       4         magic "UFCK"
//   4       4  u32    format version (1)
//   8       4  u32    layer count L
//   12      8*L u64   layer_sizes
//   ..      4  u32    activation tag (0 relu, 1 tanh)
//   ..      8  u64    model seed
//   ..      8  u64    parameter count d
//   ..      8*d f64   parameters in flat-layout order
struct Checkpoint {
  ModelSpec spec;
  ParamVector params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<unsigned char>& bytes);
// FNV-1a of the bytes, as 16 lowercase hex digits.
std::string hash_hex(const std::vector<unsigned char>& bytes);
std::string hash_hex(const std::string& text);

namespace le {
void put_u32(std::vector<unsigned char>& out, std::uint32_t v);
void put_u64(std::vector<unsigned char>& out, std::uint64_t v);
void put_f64(std::vector<unsigned char>& out, double v);

// Bounds-checked little-endian reader; throws IoError past the end.
class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void expect_bytes(const char* tag, std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};
}  // namespace le

}  // namespace unlearn
