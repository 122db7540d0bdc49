#include "ltn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ltn/errors.hpp"

namespace ltn {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a finite number, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(key, "expected true|false, got '" + s + "'");
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Entry size_entry(std::string key, T RunConfig::*field) {
  return {key,
          [key, field](RunConfig& c, const std::string& v) { c.*field = static_cast<T>(parse_u64(key, v)); },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

Entry double_entry(std::string key, double RunConfig::*field) {
  return {key, [key, field](RunConfig& c, const std::string& v) { c.*field = parse_double(key, v); },
          [field](const RunConfig& c) { return format_double(c.*field); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"variant", [](RunConfig& c, const std::string& v) { c.variant = parse_variant(v); },
       [](const RunConfig& c) { return to_string(c.variant); }},
      {"orthogonalize", [](RunConfig& c, const std::string& v) { c.orthogonalize = parse_bool("orthogonalize", v); },
       [](const RunConfig& c) { return std::string(c.orthogonalize ? "true" : "false"); }},
      {"attention_mode", [](RunConfig& c, const std::string& v) { c.attention_mode = parse_attention_mode(v); },
       [](const RunConfig& c) { return to_string(c.attention_mode); }},
      {"basis_gradient",
       [](RunConfig& c, const std::string& v) {
         if (v == "full") c.basis_gradient = BasisGradient::Full;
         else if (v == "straight_through") c.basis_gradient = BasisGradient::StraightThrough;
         else throw ConfigError("basis_gradient", "expected full|straight_through, got '" + v + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.basis_gradient == BasisGradient::Full ? "full" : "straight_through");
       }},
      {"framework", [](RunConfig& c, const std::string& v) { c.framework = parse_framework(v); },
       [](const RunConfig& c) { return to_string(c.framework); }},
      {"denominator", [](RunConfig& c, const std::string& v) { c.denominator = parse_denominator(v); },
       [](const RunConfig& c) { return to_string(c.denominator); }},
      size_entry("dim", &RunConfig::dim),
      size_entry("basis_size", &RunConfig::basis_size),
      size_entry("num_positives", &RunConfig::num_positives),
      size_entry("queue_capacity", &RunConfig::queue_capacity),
      double_entry("temperature", &RunConfig::temperature),
      double_entry("momentum", &RunConfig::momentum),
      size_entry("proj_dim", &RunConfig::proj_dim),
      double_entry("learning_rate", &RunConfig::learning_rate),
      double_entry("sgd_momentum", &RunConfig::sgd_momentum),
      double_entry("weight_decay", &RunConfig::weight_decay),
      size_entry("steps", &RunConfig::steps),
      size_entry("batch_size", &RunConfig::batch_size),
      size_entry("seed", &RunConfig::seed),
      size_entry("te_layers", &RunConfig::te_layers),
      size_entry("te_width", &RunConfig::te_width),
      size_entry("te_inner_width", &RunConfig::te_inner_width),
      {"regime", [](RunConfig& c, const std::string& v) { c.regime = parse_regime(v); },
       [](const RunConfig& c) { return to_string(c.regime); }},
      size_entry("feature_dim", &RunConfig::feature_dim),
      size_entry("clip_length", &RunConfig::clip_length),
      double_entry("frame_rate", &RunConfig::frame_rate),
      double_entry("duration", &RunConfig::duration),
      double_entry("speed_min", &RunConfig::speed_min),
      double_entry("speed_max", &RunConfig::speed_max),
      double_entry("noise_scale", &RunConfig::noise_scale),
      double_entry("static_scale", &RunConfig::static_scale),
      double_entry("drift_onset", &RunConfig::drift_onset),
      size_entry("train_streams", &RunConfig::train_streams),
      double_entry("min_gap", &RunConfig::min_gap),
      double_entry("aug_strength", &RunConfig::aug_strength),
      double_entry("aug_noise", &RunConfig::aug_noise),
      double_entry("aug_jitter", &RunConfig::aug_jitter),
      double_entry("aug_mask", &RunConfig::aug_mask),
      size_entry("probe_train_streams", &RunConfig::probe_train_streams),
      size_entry("probe_test_streams", &RunConfig::probe_test_streams),
      size_entry("probe_clips_per_stream", &RunConfig::probe_clips_per_stream),
      size_entry("probe_steps", &RunConfig::probe_steps),
      double_entry("probe_learning_rate", &RunConfig::probe_learning_rate),
      double_entry("probe_l2", &RunConfig::probe_l2),
      {"probe_features",
       [](RunConfig& c, const std::string& v) {
         if (v == "original") c.probe_features = ProbeFeatures::Original;
         else if (v == "blended") c.probe_features = ProbeFeatures::Blended;
         else throw ConfigError("probe_features", "expected original|blended, got '" + v + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.probe_features == ProbeFeatures::Original ? "original" : "blended");
       }},
      size_entry("align_segments", &RunConfig::align_segments),
  };
  return table;
}

const Entry& find_entry(const std::string& key) {
  for (const Entry& e : entries())
    if (e.key == key) return e;
  throw ConfigError(key, "unknown key");
}

}  // namespace

std::string to_string(Framework f) { return f == Framework::MoCo ? "moco" : "byol"; }

Framework parse_framework(const std::string& s) {
  if (s == "moco") return Framework::MoCo;
  if (s == "byol") return Framework::Byol;
  throw ConfigError("framework", "expected moco|byol, got '" + s + "'");
}

std::size_t RunConfig::num_classes() const { return regime == Regime::TemporalDirection ? 2 : 4; }

DatasetSpec RunConfig::dataset() const {
  DatasetSpec d;
  d.regime = regime;
  d.feature_dim = feature_dim;
  d.duration = duration;
  d.frame_rate = frame_rate;
  d.speed_min = speed_min;
  d.speed_max = speed_max;
  d.noise_scale = noise_scale;
  d.static_scale = static_scale;
  d.drift_onset = drift_onset;
  d.num_classes = num_classes();
  return d;
}

Augmentation RunConfig::augmentation() const { return {aug_strength, aug_noise, aug_jitter, aug_mask}; }

void RunConfig::validate() const {
  auto require = [](bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
  };
  require(dim >= 2, "dim", "must be >= 2");
  require(basis_size >= 1 && basis_size < dim, "basis_size", "must satisfy 1 <= M < dim");
  require(num_positives >= 1, "num_positives", "must be >= 1");
  require(queue_capacity >= 1, "queue_capacity", "must be >= 1");
  require(temperature > 0.0, "temperature", "must be > 0");
  require(momentum >= 0.0 && momentum <= 1.0, "momentum", "must lie in [0, 1]");
  require(proj_dim >= 1, "proj_dim", "must be >= 1");
  require(learning_rate >= 0.0, "learning_rate", "must be >= 0");
  require(sgd_momentum >= 0.0 && sgd_momentum < 1.0, "sgd_momentum", "must lie in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay", "must be >= 0");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(te_layers >= 1 && te_layers <= 8, "te_layers", "must lie in [1, 8]");
  require(te_width >= 1, "te_width", "must be >= 1");
  require(te_inner_width >= 1, "te_inner_width", "must be >= 1");
  require(feature_dim >= 2, "feature_dim", "must be >= 2");
  require(clip_length >= 1, "clip_length", "must be >= 1");
  require(frame_rate > 0.0, "frame_rate", "must be > 0");
  require(duration > 0.0, "duration", "must be > 0");
  require(speed_min >= 0.0, "speed_min", "must be >= 0");
  require(speed_max >= speed_min, "speed_max", "must be >= speed_min");
  require(noise_scale >= 0.0, "noise_scale", "must be >= 0");
  require(static_scale >= 0.0, "static_scale", "must be >= 0");
  require(drift_onset >= 0.0 && drift_onset <= 1.0, "drift_onset", "must lie in [0, 1]");
  require(train_streams >= 1, "train_streams", "must be >= 1");
  require(min_gap >= 0.0, "min_gap", "must be >= 0");
  require(aug_strength >= 0.0, "aug_strength", "must be >= 0");
  require(aug_noise >= 0.0, "aug_noise", "must be >= 0");
  require(aug_mask >= 0.0 && aug_mask <= 1.0, "aug_mask", "must lie in [0, 1]");
  require(aug_jitter >= 0.0, "aug_jitter", "must be >= 0");
  require(probe_train_streams >= num_classes(), "probe_train_streams", "must cover every class");
  require(probe_test_streams >= 1, "probe_test_streams", "must be >= 1");
  require(probe_clips_per_stream >= 1, "probe_clips_per_stream", "must be >= 1");
  require(probe_learning_rate > 0.0, "probe_learning_rate", "must be > 0");
  require(probe_l2 >= 0.0, "probe_l2", "must be >= 0");
  require(align_segments >= 3, "align_segments", "must be >= 3");

  const auto frames = static_cast<std::size_t>(std::llround(duration * frame_rate));
  require(frames >= 2 * clip_length, "duration", "stream must hold at least two clips");
  const double gap = min_gap > 0.0 ? min_gap : duration / (2.0 * static_cast<double>(num_positives + 1));
  const auto gap_frames = static_cast<std::size_t>(std::ceil(gap * frame_rate - 1e-9));
  require(frames - clip_length >= num_positives * gap_frames, "num_positives",
          "stream too short for the positives at the configured gap");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const Entry& e : entries()) os << e.key << " = " << e.get(*this) << '\n';
  return os.str();
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_entry(key).set(config, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : entries()) keys.push_back(e.key);
  return keys;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "line " + std::to_string(line_no) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    set_config_value(config, key, value);
  }
  // Widths tied to dim follow it unless given explicitly.
  if (!seen.count("proj_dim")) config.proj_dim = std::max<std::size_t>(1, config.dim / 4);
  if (!seen.count("te_width")) config.te_width = config.dim;
  if (!seen.count("te_inner_width")) config.te_inner_width = std::max<std::size_t>(1, config.dim / 4);
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("--config", "cannot read " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

}  // namespace ltn
