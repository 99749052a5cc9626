#include "unlearn/sensitivity.hpp"

#include "unlearn/checkpoint.hpp"
#include "unlearn/error.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

std::uint64_t fingerprint(const Batch& batch) {
  Fnv1a h;
  const std::uint64_t cols = batch.cols;
  h.update(&cols, sizeof cols);
  h.update(batch.inputs.data(), batch.inputs.size() * sizeof(double));
  h.update(batch.labels.data(), batch.labels.size() * sizeof(std::uint32_t));
  return h.digest();
}

SaliencyVector sensitivity_exact(const Mlp& model, const ParamVector& theta,
                                 const Batch& batch) {
  SaliencyVector s;
  s.kind = SaliencyKind::exact;
  s.batch_fingerprint = fingerprint(batch);
  const double base = model.loss(theta, batch);
  s.scores.resize(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    s.scores[j] = base - model.masked_loss(theta, j, batch);
  }
  return s;
}

SaliencyVector sensitivity_approx(const Mlp& model, const ParamVector& theta,
                                  const Batch& batch) {
  SaliencyVector s;
  s.kind = SaliencyKind::approx;
  s.batch_fingerprint = fingerprint(batch);
  s.scores = model.grad(theta, batch);
  for (std::size_t j = 0; j < theta.size(); ++j) s.scores[j] *= theta[j];
  return s;
}

void save_saliency(const std::filesystem::path& path, const SaliencyVector& s) {
  std::vector<unsigned char> out = {'U', 'F', 'S', 'L'};
  le::put_u32(out, 1);
  le::put_u32(out, static_cast<std::uint32_t>(s.kind));
  le::put_u64(out, s.batch_fingerprint);
  le::put_u64(out, s.scores.size());
  for (double v : s.scores) le::put_f64(out, v);
  write_file_bytes(path, out);
}

SaliencyVector load_saliency(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  le::Reader r(bytes);
  r.expect_bytes("UFSL", 4);
  if (r.u32() != 1) throw IoError("unsupported saliency sidecar version");
  SaliencyVector s;
  const auto kind = r.u32();
  if (kind > 1) throw IoError("unknown saliency kind");
  s.kind = static_cast<SaliencyKind>(kind);
  s.batch_fingerprint = r.u64();
  const auto d = r.u64();
  if (r.remaining() != d * 8) throw IoError("saliency sidecar size mismatch");
  s.scores.resize(d);
  for (auto& v : s.scores) v = r.f64();
  return s;
}

}  // namespace unlearn
