#include "unlearn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "unlearn/numeric.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

void Dataset::validate() const {
  if (labels.empty()) throw InvalidArgument("dataset '" + name + "' is empty");
  if (inputs.size() != labels.size() * cols) {
    throw DimensionError("dataset '" + name + "' has ragged inputs");
  }
  for (auto y : labels) {
    if (y >= class_count) {
      throw InvalidArgument("dataset '" + name + "' label out of range");
    }
  }
  for (double v : inputs) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("dataset '" + name + "' has non-finite features");
    }
  }
}

Batch Dataset::to_batch() const {
  Batch b;
  b.cols = cols;
  b.inputs = inputs;
  b.labels = labels;
  return b;
}

Batch Dataset::gather(std::span<const std::size_t> indices) const {
  Batch b;
  b.cols = cols;
  b.inputs.reserve(indices.size() * cols);
  b.labels.reserve(indices.size());
  for (auto i : indices) {
    if (i >= size()) throw DimensionError("row index out of range");
    const auto r = row(i);
    b.inputs.insert(b.inputs.end(), r.begin(), r.end());
    b.labels.push_back(labels[i]);
  }
  return b;
}

namespace {

std::vector<std::vector<double>> random_frame(std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> q;
  while (q.size() < dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    for (const auto& u : q) {
      const double p = dot(v, u);
      for (std::size_t i = 0; i < dim; ++i) v[i] -= p * u[i];
    }
    const double n = norm(v);
    if (n < 1e-8) continue;
    for (auto& x : v) x /= n;
    q.push_back(std::move(v));
  }
  return q;
}

std::vector<std::vector<double>> blob_means(const BlobsSpec& spec) {
  Rng rng(derive_seed(spec.seed, 0));
  const auto frame = random_frame(spec.dim, rng);
  std::size_t side = 1;
  while (std::pow(static_cast<double>(side), static_cast<double>(spec.dim)) <
         static_cast<double>(spec.classes)) {
    ++side;
  }
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    std::vector<double> mean(spec.dim, 0.0);
    std::size_t rest = c;
    for (std::size_t axis = 0; axis < spec.dim && rest > 0; ++axis) {
      const auto digit = static_cast<double>(rest % side);
      rest /= side;
      for (std::size_t i = 0; i < spec.dim; ++i) mean[i] += digit * frame[axis][i];
    }
    means.push_back(std::move(mean));
  }
  return means;
}

}  // namespace

TrainTest gen_blobs_with_test(const BlobsSpec& spec, std::size_t test_per_class) {
  if (spec.classes < 2) throw InvalidArgument("blobs need at least 2 classes");
  if (spec.per_class < 1) throw InvalidArgument("blobs need per_class >= 1");
  if (spec.dim < 1) throw InvalidArgument("blobs need dim >= 1");
  if (!(spec.spread > 0.0)) throw InvalidArgument("blobs need spread > 0");

  const auto means = blob_means(spec);
  Rng rng(derive_seed(spec.seed, 1));
  TrainTest out;
  for (Dataset* ds : {&out.train, &out.test}) {
    ds->class_count = spec.classes;
    ds->cols = spec.dim;
  }
  out.train.name = "blobs";
  out.test.name = "blobs-test";
  for (std::size_t i = 0; i < spec.per_class + test_per_class; ++i) {
    Dataset& ds = i < spec.per_class ? out.train : out.test;
    for (std::size_t c = 0; c < spec.classes; ++c) {
      for (std::size_t k = 0; k < spec.dim; ++k) {
        ds.inputs.push_back(means[c][k] + spec.spread * rng.normal());
      }
      ds.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return out;
}

Dataset gen_blobs(const BlobsSpec& spec) {
  return gen_blobs_with_test(spec, 0).train;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IdxError(IdxErrorKind::truncated, "truncated IDX header in '" + path + "'");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::ifstream open_idx(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw IdxError(IdxErrorKind::open_failed, "cannot open '" + p.string() + "'");
  }
  return in;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  auto images = open_idx(images_path);
  auto labels = open_idx(labels_path);
  const auto ip = images_path.string();
  const auto lp = labels_path.string();

  if (read_be32(images, ip) != 0x00000803) {
    throw IdxError(IdxErrorKind::bad_magic, "bad IDX image magic in '" + ip + "'");
  }
  if (read_be32(labels, lp) != 0x00000801) {
    throw IdxError(IdxErrorKind::bad_magic, "bad IDX label magic in '" + lp + "'");
  }
  const std::uint32_t n_images = read_be32(images, ip);
  const std::uint32_t rows = read_be32(images, ip);
  const std::uint32_t cols = read_be32(images, ip);
  const std::uint32_t n_labels = read_be32(labels, lp);
  if (n_images != n_labels) {
    throw IdxError(IdxErrorKind::count_mismatch,
                   "IDX count mismatch: " + std::to_string(n_images) +
                       " images vs " + std::to_string(n_labels) + " labels");
  }

  Dataset ds;
  ds.name = images_path.stem().string();
  ds.cols = std::size_t{rows} * cols;
  std::vector<unsigned char> pixels(std::size_t{n_images} * ds.cols);
  if (!images.read(reinterpret_cast<char*>(pixels.data()),
                   static_cast<std::streamsize>(pixels.size()))) {
    throw IdxError(IdxErrorKind::truncated, "truncated IDX image data in '" + ip + "'");
  }
  std::vector<unsigned char> ys(n_labels);
  if (!labels.read(reinterpret_cast<char*>(ys.data()),
                   static_cast<std::streamsize>(ys.size()))) {
    throw IdxError(IdxErrorKind::truncated, "truncated IDX label data in '" + lp + "'");
  }
  ds.inputs.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) ds.inputs[i] = pixels[i] / 255.0;
  ds.labels.assign(ys.begin(), ys.end());
  std::uint32_t max_label = 0;
  for (auto y : ds.labels) max_label = std::max(max_label, y);
  ds.class_count = ds.labels.empty() ? 0 : max_label + 1;
  return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  std::uint32_t side = 0;
  while (std::size_t{side + 1} * (side + 1) <= ds.cols) ++side;
  const bool square = std::size_t{side} * side == ds.cols;
  const std::uint32_t rows = square ? side : 1;
  const auto cols = static_cast<std::uint32_t>(square ? side : ds.cols);

  std::ofstream images(images_path, std::ios::binary | std::ios::trunc);
  std::ofstream labels(labels_path, std::ios::binary | std::ios::trunc);
  if (!images || !labels) throw IoError("cannot write IDX files");
  write_be32(images, 0x00000803);
  write_be32(images, static_cast<std::uint32_t>(ds.size()));
  write_be32(images, rows);
  write_be32(images, cols);
  for (double v : ds.inputs) {
    const double px = std::round(v * 255.0);
    if (px < 0.0 || px > 255.0) throw InvalidArgument("feature outside [0,1]");
    images.put(static_cast<char>(static_cast<unsigned char>(px)));
  }
  write_be32(labels, 0x00000801);
  write_be32(labels, static_cast<std::uint32_t>(ds.size()));
  for (auto y : ds.labels) {
    if (y > 255) throw InvalidArgument("IDX labels must fit in a byte");
    labels.put(static_cast<char>(static_cast<unsigned char>(y)));
  }
  if (!images || !labels) throw IoError("IDX write failed");
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV '" + path.string() + "'");
  std::size_t header_cols = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (cell != "label") {
      throw IoError("CSV '" + path.string() + "' must start with a 'label' column");
    }
    while (std::getline(ss, cell, ',')) {
      if (cell != "f" + std::to_string(header_cols)) {
        throw IoError("CSV header column '" + cell + "' should be f" +
                      std::to_string(header_cols));
      }
      ++header_cols;
    }
  }

  Dataset ds;
  ds.name = path.stem().string();
  ds.cols = header_cols;
  std::size_t line_no = 1;
  std::uint32_t max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t n = 0;
    std::getline(ss, cell, ',');
    try {
      const auto y = std::stoul(cell);
      ds.labels.push_back(static_cast<std::uint32_t>(y));
      max_label = std::max(max_label, ds.labels.back());
      while (std::getline(ss, cell, ',')) {
        ds.inputs.push_back(std::stod(cell));
        ++n;
      }
    } catch (const std::logic_error&) {
      throw IoError("CSV '" + path.string() + "' line " + std::to_string(line_no) +
                    ": cannot parse '" + cell + "'");
    }
    if (n != header_cols) {
      throw IoError("CSV '" + path.string() + "' line " + std::to_string(line_no) +
                    " has " + std::to_string(n) + " features, header has " +
                    std::to_string(header_cols));
    }
  }
  ds.class_count = ds.labels.empty() ? 0 : max_label + 1;
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "label";
  for (std::size_t k = 0; k < ds.cols; ++k) out << ",f" << k;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (double v : ds.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("CSV write failed for '" + path.string() + "'");
}

std::string_view to_string(SplitMode m) {
  return m == SplitMode::sample_wise ? "sample_wise" : "class_wise";
}

SplitMode parse_split_mode(std::string_view name) {
  if (name == "sample_wise") return SplitMode::sample_wise;
  if (name == "class_wise") return SplitMode::class_wise;
  throw InvalidArgument("unknown split mode '" + std::string(name) + "'");
}

std::vector<std::size_t> SplitSpec::retain_indices() const {
  std::vector<std::size_t> out;
  out.reserve(total - forget_indices.size());
  std::size_t f = 0;
  for (std::size_t i = 0; i < total; ++i) {
    if (f < forget_indices.size() && forget_indices[f] == i) {
      ++f;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

SplitSpec make_sample_split(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidArgument("forget fraction must lie in (0, 1)");
  }
  SplitSpec s;
  s.mode = SplitMode::sample_wise;
  s.seed = seed;
  s.fraction = fraction;
  s.total = ds.size();
  std::vector<std::size_t> perm(ds.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));
  perm.resize(floor_count(fraction, ds.size()));
  std::sort(perm.begin(), perm.end());
  s.forget_indices = std::move(perm);
  return s;
}

SplitSpec make_class_split(const Dataset& ds, std::vector<std::uint32_t> classes) {
  if (classes.empty()) throw InvalidArgument("class_wise split needs classes");
  std::set<std::uint32_t> wanted;
  for (auto c : classes) {
    if (c >= ds.class_count) {
      throw InvalidArgument("unknown class " + std::to_string(c));
    }
    wanted.insert(c);
  }
  SplitSpec s;
  s.mode = SplitMode::class_wise;
  s.classes.assign(wanted.begin(), wanted.end());
  s.total = ds.size();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (wanted.count(ds.labels[i])) s.forget_indices.push_back(i);
  }
  return s;
}

std::vector<std::size_t> subsample_forget(const SplitSpec& split, double p,
                                          std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("trim ratio must lie in (0, 1]");
  std::vector<std::size_t> pool = split.forget_indices;
  const std::size_t m = std::min(pool.size(), ceil_count(p, pool.size()));
  if (m == pool.size()) return pool;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(pool));
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace unlearn
