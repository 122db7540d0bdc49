#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ltn/matrix.hpp"
#include "ltn/nn.hpp"
#include "ltn/time_encoder.hpp"

namespace ltn {

/// Parameters of one synthetic stream: frame(t) = static + t * speed * drift + noise(t).
struct GeneratorSpec {
  Matrix static_component;  // 1 x F
  Matrix drift_direction;   // 1 x F, unit norm unless speed == 0
  double speed = 0.0;
  double noise_scale = 0.0;
  double duration = 10.0;   // seconds
  double frame_rate = 4.0;  // frames per second
  int class_label = 0;
};

struct Stream {
  std::uint64_t id = 0;
  GeneratorSpec spec;
  Matrix frames;  // frame_count x F

  std::size_t frame_count() const noexcept { return frames.rows(); }
  std::size_t feature_dim() const noexcept { return frames.cols(); }
  double duration() const noexcept { return spec.duration; }
  double frame_rate() const noexcept { return spec.frame_rate; }
  int class_label() const noexcept { return spec.class_label; }
  double time_of(std::size_t frame) const { return static_cast<double>(frame) / spec.frame_rate; }
};

/// Deterministic in (spec, seed). Per-frame noise is drawn once per stream.
Stream generate_stream(const GeneratorSpec& spec, std::uint64_t seed, std::uint64_t id = 0);

struct Augmentation {
  double strength = 1.0;
  double noise = 0.05;      // additive Gaussian stddev
  double jitter = 0.1;      // per-feature multiplicative scale stddev
  double mask_prob = 0.1;   // per-feature zeroing probability
};

struct ClipView {
  Matrix clip;  // clip_length x F
  TimeShift dt;
  std::size_t start_frame = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t augmentation_seed = 0;
};

struct ViewSample {
  ClipView query;
  std::vector<ClipView> keys;
};

/// Slice [start, start + clip_length) of the stream with augmentation drawn from `seed`.
ClipView make_view(const Stream& s, std::size_t start_frame, std::size_t clip_length, const Augmentation& aug,
                   std::uint64_t seed);

/// Query plus P keys whose start times are pairwise at least `min_gap` seconds
/// apart (min_gap <= 0 selects duration / (2 (P + 1))).
ViewSample sample_views(const Stream& s, std::size_t num_positives, std::size_t clip_length, double min_gap,
                        const Augmentation& aug, Rng& rng);

/// Desk-scale stand-in for the video backbone: a shared per-frame linear layer
/// with ReLU, mean-pooled over time, then a linear map to dim.
struct ClipEncoder {
  Linear frame;
  Linear output;

  static ClipEncoder random(std::size_t feature_dim, std::size_t hidden, std::size_t dim, Rng& rng);
  static ClipEncoder zeros(std::size_t feature_dim, std::size_t hidden, std::size_t dim);

  std::size_t feature_dim() const noexcept { return frame.in(); }
  std::size_t dim() const noexcept { return output.out(); }
  void append_params(std::vector<NamedParam>& out, const std::string& prefix);
};

/// `frames` stacks n clips of `clip_length` rows each; returns n x dim.
Var encode_clips(Binder& bind, const ClipEncoder& enc, Var frames, std::size_t clip_length);
Matrix encode_clip(const ClipView& view, const ClipEncoder& enc);
/// Row-stacks the clips of several views.
Matrix stack_clips(std::span<const ClipView* const> views);

enum class Regime {
  TemporalDirection,  // class = sign of the drift along a shared axis
  StaticTexture,      // class = static prototype; drift sign is a nuisance
};

std::string to_string(Regime r);
Regime parse_regime(const std::string& s);

struct DatasetSpec {
  Regime regime = Regime::TemporalDirection;
  std::size_t feature_dim = 16;
  double duration = 10.0;
  double frame_rate = 4.0;
  double speed_min = 0.5;
  double speed_max = 1.5;
  double noise_scale = 0.05;
  double static_scale = 1.0;
  // Fraction of the duration at which the axis coordinate crosses zero.
  double drift_onset = 0.25;
  std::size_t num_classes = 2;
};

enum class Split : std::uint64_t { Train = 1, ProbeTrain = 2, ProbeTest = 3, Analysis = 4 };

/// Dataset-wide structure shared by every split: the drift axis and class prototypes.
struct World {
  DatasetSpec spec;
  Matrix axis;        // 1 x F unit
  Matrix prototypes;  // num_classes x F, orthogonal to axis

  static World create(const DatasetSpec& spec, std::uint64_t data_seed);
  GeneratorSpec stream_spec(int class_label, Rng& rng) const;
  /// Class-balanced streams, deterministic in (world, data_seed, split, index).
  std::vector<Stream> make_streams(std::uint64_t data_seed, Split split, std::size_t count) const;
};

/// Flat binary export: magic "LTNSTRM1", then little-endian u64 counts
/// (stream_count, frame_count, feature_dim), one u64 class label per stream,
/// then f64 frame_rate and every stream's frames row-major as f64, then a
/// trailer: u64 byte length and free-form metadata text (may be empty).
void write_streams(const std::filesystem::path& path, std::span<const Stream> streams,
                   const std::string& metadata = {});
/// Reads the layout above; the trailer is optional and lands in `metadata`.
std::vector<Stream> read_streams(const std::filesystem::path& path, std::string* metadata = nullptr);

/// SplitMix64 mixing; derives independent seeds from structured tuples.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace ltn
