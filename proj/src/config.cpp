#include "unlearn/config.hpp"

#include <algorithm>
#include <fstream>

#include "unlearn/checkpoint.hpp"
#include "unlearn/error.hpp"

namespace unlearn {

namespace {

using nlohmann::json;

// Typed accessors that report the dotted path of whatever is wrong.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_[key].is_null(); }
  std::string key(const char* k) const { return path_ + "." + k; }

  const json& at(const char* k) const {
    if (!has(k)) throw ConfigError("missing key '" + key(k) + "'");
    return j_[k];
  }

  Section sub(const char* k) const { return Section(at(k), key(k)); }

  double number(const char* k) const {
    const auto& v = at(k);
    if (!v.is_number()) throw ConfigError("'" + key(k) + "' must be a number");
    return v.get<double>();
  }
  double number(const char* k, double fallback) const {
    return has(k) ? number(k) : fallback;
  }

  std::uint64_t count(const char* k) const {
    const auto& v = at(k);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError("'" + key(k) + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::uint64_t count(const char* k, std::uint64_t fallback) const {
    return has(k) ? count(k) : fallback;
  }

  bool flag(const char* k, bool fallback) const {
    if (!has(k)) return fallback;
    const auto& v = at(k);
    if (!v.is_boolean()) throw ConfigError("'" + key(k) + "' must be true or false");
    return v.get<bool>();
  }

  std::string text(const char* k) const {
    const auto& v = at(k);
    if (!v.is_string()) throw ConfigError("'" + key(k) + "' must be a string");
    return v.get<std::string>();
  }
  std::string text(const char* k, const std::string& fallback) const {
    return has(k) ? text(k) : fallback;
  }

  std::filesystem::path existing_path(const char* k,
                                      const std::filesystem::path& base) const {
    std::filesystem::path p = text(k);
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) {
      throw ConfigError("'" + key(k) + "': file '" + p.string() + "' does not exist");
    }
    return p;
  }

  // Runs fn, re-labelling InvalidArgument as a ConfigError on key k.
  template <typename Fn>
  auto checked(const char* k, Fn&& fn) const {
    try {
      return fn();
    } catch (const InvalidArgument& e) {
      throw ConfigError("'" + key(k) + "': " + e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
};

void require(bool ok, const Section& s, const char* k, const char* what) {
  if (!ok) throw ConfigError("'" + s.key(k) + "' " + what);
}

DatasetConfig parse_dataset(const Section& s, const std::filesystem::path& base) {
  DatasetConfig d;
  const auto kind = s.text("kind");
  if (kind == "blobs") {
    d.kind = DatasetKind::blobs;
    d.blobs.classes = s.count("classes");
    d.blobs.per_class = s.count("per_class");
    d.blobs.dim = s.count("dim");
    d.blobs.spread = s.number("spread");
    d.blobs.seed = s.count("seed", 0);
    d.test_per_class = s.count("test_per_class", 50);
    require(d.blobs.classes >= 2, s, "classes", "must be >= 2");
    require(d.blobs.per_class >= 1, s, "per_class", "must be >= 1");
    require(d.blobs.dim >= 1, s, "dim", "must be >= 1");
    require(d.blobs.spread > 0.0, s, "spread", "must be > 0");
    require(d.test_per_class >= 1, s, "test_per_class", "must be >= 1");
  } else if (kind == "idx") {
    d.kind = DatasetKind::idx;
    d.train_images = s.existing_path("train_images", base);
    d.train_labels = s.existing_path("train_labels", base);
    d.test_images = s.existing_path("test_images", base);
    d.test_labels = s.existing_path("test_labels", base);
  } else if (kind == "csv") {
    d.kind = DatasetKind::csv;
    d.train_csv = s.existing_path("train", base);
    d.test_csv = s.existing_path("test", base);
  } else {
    throw ConfigError("'" + s.key("kind") + "' must be blobs, idx or csv");
  }
  return d;
}

ModelSpec parse_model(const Section& s) {
  ModelSpec m;
  const auto& sizes = s.at("layer_sizes");
  if (!sizes.is_array()) throw ConfigError("'" + s.key("layer_sizes") + "' must be an array");
  for (const auto& v : sizes) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
      throw ConfigError("'" + s.key("layer_sizes") + "' entries must be positive integers");
    }
    m.layer_sizes.push_back(v.get<std::size_t>());
  }
  m.activation = s.checked("activation",
                           [&] { return parse_activation(s.text("activation", "relu")); });
  m.seed = s.count("seed", 0);
  s.checked("layer_sizes", [&] { m.validate(); return 0; });
  return m;
}

TrainConfig parse_train(const Section& s) {
  TrainConfig t;
  t.epochs = s.count("epochs");
  t.learning_rate = s.number("learning_rate");
  t.batch_size = s.count("batch_size", 32);
  t.seed = s.count("seed", 0);
  require(t.learning_rate > 0.0, s, "learning_rate", "must be > 0");
  require(t.batch_size >= 1, s, "batch_size", "must be >= 1");
  return t;
}

SplitConfig parse_split(const Section& s) {
  SplitConfig c;
  c.mode = s.checked("mode", [&] { return parse_split_mode(s.text("mode")); });
  c.seed = s.count("seed", 0);
  if (c.mode == SplitMode::sample_wise) {
    c.fraction = s.number("fraction");
    require(c.fraction > 0.0 && c.fraction < 1.0, s, "fraction", "must lie in (0, 1)");
  } else {
    const auto& cls = s.at("classes");
    if (!cls.is_array() || cls.empty()) {
      throw ConfigError("'" + s.key("classes") + "' must be a non-empty array");
    }
    for (const auto& v : cls) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ConfigError("'" + s.key("classes") + "' entries must be class indices");
      }
      c.classes.push_back(v.get<std::uint32_t>());
    }
  }
  return c;
}

UnlearnConfig parse_unlearn(const Section& s) {
  UnlearnConfig u;
  u.method = s.text("method", "scissorhands");
  if (std::find(kMethods.begin(), kMethods.end(), u.method) == kMethods.end()) {
    throw ConfigError("'" + s.key("method") + "' must be one of scissorhands, retrain, "
                      "finetune, gradient_ascent");
  }
  u.k = s.number("k", 95.0);
  u.lambda = s.number("lambda", 0.05);
  u.learning_rate = s.number("learning_rate", 0.05);
  u.epochs = s.count("epochs", 10);
  u.batch_size = s.count("batch_size", 32);
  u.trim_ratio = s.number("trim_ratio", 1.0);
  u.init = s.checked("init", [&] { return parse_init_strategy(s.text("init", "uniform")); });
  u.projection = s.flag("projection", true);
  u.rank.signed_scores = s.flag("signed_ranking", false);
  u.rank.per_layer = s.flag("per_layer", false);
  u.rank.exclude_biases = s.flag("exclude_biases", false);
  const auto sal = s.text("saliency", "approx");
  if (sal == "approx") {
    u.saliency = SaliencyChoice::approx;
  } else if (sal == "exact") {
    u.saliency = SaliencyChoice::exact;
  } else {
    throw ConfigError("'" + s.key("saliency") + "' must be approx or exact");
  }
  u.seed = s.count("seed", 0);
  require(u.k >= 0.0 && u.k < 100.0, s, "k", "must lie in [0, 100)");
  require(u.lambda >= 0.0, s, "lambda", "must be >= 0");
  require(u.learning_rate > 0.0, s, "learning_rate", "must be > 0");
  require(u.batch_size >= 1, s, "batch_size", "must be >= 1");
  require(u.trim_ratio > 0.0 && u.trim_ratio <= 1.0, s, "trim_ratio", "must lie in (0, 1]");
  return u;
}

EvalConfig parse_eval(const Section& s, const std::filesystem::path& base) {
  EvalConfig e;
  e.mia = s.flag("mia", true);
  e.relearn_cap = s.count("relearn_cap", 0);
  if (s.has("relearn_learning_rate")) {
    e.relearn_learning_rate = s.number("relearn_learning_rate");
    require(*e.relearn_learning_rate >= 0.0, s, "relearn_learning_rate", "must be >= 0");
  }
  if (s.has("relearn_target")) e.relearn_target = s.number("relearn_target");
  if (s.has("reference")) e.reference = s.existing_path("reference", base);
  e.require_avg_gap = s.flag("avg_gap", false);
  e.seed = s.count("seed", 0);
  return e;
}

}  // namespace

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  const Section root(j, "config");
  ExperimentConfig c;
  c.raw = j;
  c.hash = hash_hex(j.dump());
  c.dataset = parse_dataset(root.sub("dataset"), base_dir);
  c.model = parse_model(root.sub("model"));
  c.train = parse_train(root.sub("train"));
  c.split = parse_split(root.sub("split"));
  c.unlearn = root.has("unlearn") ? parse_unlearn(root.sub("unlearn"))
                                  : parse_unlearn(Section(json::object(), "config.unlearn"));
  c.eval = root.has("eval") ? parse_eval(root.sub("eval"), base_dir)
                            : parse_eval(Section(json::object(), "config.eval"), base_dir);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return parse_config(j, path.parent_path());
}

}  // namespace unlearn
