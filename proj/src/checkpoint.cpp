#include "unlearn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "unlearn/error.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

namespace le {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void Reader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw IoError("unexpected end of data");
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
  return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

void Reader::expect_bytes(const char* tag, std::size_t n) {
  need(n);
  if (std::memcmp(bytes_.data() + pos_, tag, n) != 0) {
    throw IoError(std::string("bad magic, expected '") + tag + "'");
  }
  pos_ += n;
}

}  // namespace le

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.spec.validate();
  if (ckpt.params.size() != ckpt.spec.param_count()) {
    throw DimensionError("checkpoint parameters do not match its spec");
  }
  std::vector<unsigned char> out = {'U', 'F', 'C', 'K'};
  le::put_u32(out, kCheckpointVersion);
  le::put_u32(out, static_cast<std::uint32_t>(ckpt.spec.layer_sizes.size()));
  for (auto n : ckpt.spec.layer_sizes) le::put_u64(out, n);
  le::put_u32(out, static_cast<std::uint32_t>(ckpt.spec.activation));
  le::put_u64(out, ckpt.spec.seed);
  le::put_u64(out, ckpt.params.size());
  for (double v : ckpt.params.values) le::put_f64(out, v);
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  le::Reader r(bytes);
  r.expect_bytes("UFCK", 4);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto layers = r.u32();
  if (layers > 1024) throw IoError("implausible layer count in checkpoint");
  for (std::uint32_t i = 0; i < layers; ++i) {
    ckpt.spec.layer_sizes.push_back(static_cast<std::size_t>(r.u64()));
  }
  const auto tag = r.u32();
  if (tag > 1) throw IoError("unknown activation tag in checkpoint");
  ckpt.spec.activation = static_cast<Activation>(tag);
  ckpt.spec.seed = r.u64();
  try {
    ckpt.spec.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("invalid model spec in checkpoint: ") + e.what());
  }
  const auto d = r.u64();
  if (d != ckpt.spec.param_count()) {
    throw IoError("checkpoint parameter count does not match its layer sizes");
  }
  if (r.remaining() != d * 8) throw IoError("checkpoint size mismatch");
  ckpt.params.values.resize(d);
  for (auto& v : ckpt.params.values) v = r.f64();
  return ckpt;
}

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

namespace {
std::string to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}
}  // namespace

std::string hash_hex(const std::vector<unsigned char>& bytes) {
  Fnv1a h;
  h.update(bytes.data(), bytes.size());
  return to_hex(h.digest());
}

std::string hash_hex(const std::string& text) {
  Fnv1a h;
  h.update(text.data(), text.size());
  return to_hex(h.digest());
}

}  // namespace unlearn
