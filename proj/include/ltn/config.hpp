#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ltn/basis.hpp"
#include "ltn/contrastive.hpp"
#include "ltn/navigation.hpp"
#include "ltn/synthetic.hpp"

namespace ltn {

enum class Framework { MoCo, Byol };
enum class ProbeFeatures { Original, Blended };

std::string to_string(Framework f);
Framework parse_framework(const std::string& s);

/// Everything that determines a run. Text form is flat `key = value` lines
/// with `#` comments; unknown keys are rejected.
struct RunConfig {
  // navigation
  Variant variant = Variant::LinearTransform;
  bool orthogonalize = true;
  AttentionMode attention_mode = AttentionMode::Hadamard;
  BasisGradient basis_gradient = BasisGradient::Full;

  // contrastive objective
  Framework framework = Framework::MoCo;
  Denominator denominator = Denominator::PosNeg;
  std::size_t dim = 64;
  std::size_t basis_size = 8;
  std::size_t num_positives = 4;
  std::size_t queue_capacity = 1024;
  double temperature = 0.1;
  double momentum = 0.99;
  std::size_t proj_dim = 16;

  // optimization
  double learning_rate = 0.05;
  double sgd_momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t steps = 500;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;

  // time encoder
  std::size_t te_layers = 2;
  std::size_t te_width = 64;
  std::size_t te_inner_width = 16;

  // data
  Regime regime = Regime::TemporalDirection;
  std::size_t feature_dim = 16;
  std::size_t clip_length = 8;
  double frame_rate = 4.0;
  double duration = 10.0;
  double speed_min = 0.5;
  double speed_max = 1.5;
  double noise_scale = 0.05;
  double static_scale = 1.0;
  double drift_onset = 0.25;
  std::size_t train_streams = 256;
  double min_gap = 0.0;
  double aug_strength = 1.0;
  double aug_noise = 0.05;
  double aug_jitter = 0.1;
  double aug_mask = 0.1;

  // evaluation
  std::size_t probe_train_streams = 128;
  std::size_t probe_test_streams = 128;
  std::size_t probe_clips_per_stream = 4;
  std::size_t probe_steps = 400;
  double probe_learning_rate = 0.5;
  double probe_l2 = 1e-3;
  ProbeFeatures probe_features = ProbeFeatures::Original;
  std::size_t align_segments = 20;

  std::size_t num_classes() const;
  DatasetSpec dataset() const;
  Augmentation augmentation() const;
  /// Throws ConfigError naming the first out-of-range key.
  void validate() const;
  /// Canonical resolved text, one key per line in a fixed order.
  std::string to_text() const;
};

/// Parses and validates. Keys absent from `text` keep their defaults.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Applies one `key`, `value` pair (used by parsing and CLI overrides).
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

}  // namespace ltn
