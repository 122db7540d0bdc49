#include "ltn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ltn/binary_io.hpp"
#include "ltn/errors.hpp"
#include "ltn/ops.hpp"

namespace ltn {
namespace {

constexpr char kStreamMagic[8] = {'L', 'T', 'N', 'S', 'T', 'R', 'M', '1'};

double row_norm(const Matrix& m) { return frobenius_norm(m); }

Matrix random_unit(std::size_t n, Rng& rng) {
  Matrix v = gaussian_matrix(1, n, 1.0, rng);
  v *= 1.0 / row_norm(v);
  return v;
}

// Removes the component of v along the unit row `axis`.
void remove_along(Matrix& v, const Matrix& axis) {
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) d += v[i] * axis[i];
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * axis[i];
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Stream generate_stream(const GeneratorSpec& spec, std::uint64_t seed, std::uint64_t id) {
  const std::size_t f = spec.static_component.cols();
  if (spec.static_component.rows() != 1 || f == 0) throw Error("generator: static component must be 1 x F");
  if (!spec.drift_direction.same_shape(spec.static_component)) throw Error("generator: drift must be 1 x F");
  if (!(spec.speed >= 0.0) || !std::isfinite(spec.speed)) throw Error("generator: speed must be >= 0");
  if (!(spec.noise_scale >= 0.0) || !std::isfinite(spec.noise_scale)) throw Error("generator: noise must be >= 0");
  if (!(spec.duration > 0.0) || !(spec.frame_rate > 0.0)) throw Error("generator: duration and frame rate must be > 0");
  if (!spec.static_component.all_finite() || !spec.drift_direction.all_finite()) {
    throw Error("generator: non-finite spec");
  }
  const auto frames = static_cast<std::size_t>(std::llround(spec.duration * spec.frame_rate));
  if (frames < 2) throw Error("generator: stream needs at least two frames");

  Stream s;
  s.id = id;
  s.spec = spec;
  s.frames = Matrix(frames, f);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / spec.frame_rate;
    for (std::size_t j = 0; j < f; ++j) {
      double v = spec.static_component[j] + t * spec.speed * spec.drift_direction[j];
      if (spec.noise_scale > 0.0) v += spec.noise_scale * noise(rng);
      s.frames(k, j) = v;
    }
  }
  return s;
}

ClipView make_view(const Stream& s, std::size_t start_frame, std::size_t clip_length, const Augmentation& aug,
                   std::uint64_t seed) {
  if (clip_length == 0 || start_frame + clip_length > s.frame_count()) {
    throw Error("view [" + std::to_string(start_frame) + ", " + std::to_string(start_frame + clip_length) +
                ") exceeds stream of " + std::to_string(s.frame_count()) + " frames");
  }
  const std::size_t f = s.feature_dim();
  std::vector<double> data(s.frames.data().begin() + static_cast<std::ptrdiff_t>(start_frame * f),
                           s.frames.data().begin() + static_cast<std::ptrdiff_t>((start_frame + clip_length) * f));
  ClipView view;
  view.clip = Matrix(clip_length, f, std::move(data));
  view.dt = {s.time_of(start_frame)};
  view.start_frame = start_frame;
  view.stream_id = s.id;
  view.augmentation_seed = seed;
  if (aug.strength == 0.0) return view;

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> gain(f);
  for (std::size_t j = 0; j < f; ++j) {
    gain[j] = 1.0 + aug.strength * aug.jitter * gauss(rng);
    if (unif(rng) < aug.strength * aug.mask_prob) gain[j] = 0.0;
  }
  for (std::size_t r = 0; r < clip_length; ++r)
    for (std::size_t j = 0; j < f; ++j)
      view.clip(r, j) = gain[j] * (view.clip(r, j) + aug.strength * aug.noise * gauss(rng));
  return view;
}

ViewSample sample_views(const Stream& s, std::size_t num_positives, std::size_t clip_length, double min_gap,
                        const Augmentation& aug, Rng& rng) {
  if (num_positives == 0) throw Error("sample_views needs at least one positive");
  const std::size_t count = num_positives + 1;
  if (min_gap <= 0.0) min_gap = s.duration() / (2.0 * static_cast<double>(count));
  const auto gap_frames = static_cast<std::size_t>(std::ceil(min_gap * s.frame_rate() - 1e-9));
  if (s.frame_count() < clip_length) throw Error("stream shorter than one clip");
  const std::size_t max_start = s.frame_count() - clip_length;
  if (max_start < num_positives * gap_frames) {
    throw Error("stream too short for " + std::to_string(count) + " views with a " + std::to_string(min_gap) +
                " s gap");
  }
  const std::size_t slack = max_start - num_positives * gap_frames;
  std::uniform_int_distribution<std::size_t> pick(0, slack);
  std::vector<std::size_t> starts(count);
  for (auto& st : starts) st = pick(rng);
  std::sort(starts.begin(), starts.end());
  for (std::size_t i = 0; i < count; ++i) starts[i] += i * gap_frames;
  std::shuffle(starts.begin(), starts.end(), rng);

  ViewSample out;
  out.query = make_view(s, starts[0], clip_length, aug, rng());
  for (std::size_t i = 1; i < count; ++i) out.keys.push_back(make_view(s, starts[i], clip_length, aug, rng()));
  return out;
}

ClipEncoder ClipEncoder::random(std::size_t feature_dim, std::size_t hidden, std::size_t dim, Rng& rng) {
  return {Linear::random(feature_dim, hidden, std::sqrt(2.0), rng), Linear::random(hidden, dim, 1.0, rng)};
}

ClipEncoder ClipEncoder::zeros(std::size_t feature_dim, std::size_t hidden, std::size_t dim) {
  return {Linear::zeros(feature_dim, hidden), Linear::zeros(hidden, dim)};
}

void ClipEncoder::append_params(std::vector<NamedParam>& out, const std::string& prefix) {
  ltn::append_params(out, prefix + ".frame", frame);
  ltn::append_params(out, prefix + ".output", output);
}

Var encode_clips(Binder& bind, const ClipEncoder& enc, Var frames, std::size_t clip_length) {
  if (frames.cols() != enc.feature_dim()) {
    throw ShapeError("encode_clips: frames have " + std::to_string(frames.cols()) + " features, encoder expects " +
                     std::to_string(enc.feature_dim()));
  }
  const Var per_frame = relu(apply(bind, enc.frame, frames));
  return apply(bind, enc.output, group_mean_rows(per_frame, clip_length));
}

Matrix encode_clip(const ClipView& view, const ClipEncoder& enc) {
  Tape tape;
  Binder bind(tape, false);
  return encode_clips(bind, enc, tape.constant(view.clip), view.clip.rows()).value();
}

Matrix stack_clips(std::span<const ClipView* const> views) {
  std::vector<Matrix> parts;
  parts.reserve(views.size());
  for (const ClipView* v : views) parts.push_back(v->clip);
  return vstack(parts);
}

std::string to_string(Regime r) {
  return r == Regime::TemporalDirection ? "temporal-direction" : "static-texture";
}

Regime parse_regime(const std::string& s) {
  if (s == "temporal-direction") return Regime::TemporalDirection;
  if (s == "static-texture") return Regime::StaticTexture;
  throw ConfigError("regime", "expected temporal-direction|static-texture, got '" + s + "'");
}

World World::create(const DatasetSpec& spec, std::uint64_t data_seed) {
  if (spec.feature_dim < 2) throw Error("dataset needs at least two features");
  if (spec.num_classes < 2) throw Error("dataset needs at least two classes");
  if (!(spec.speed_min >= 0.0) || spec.speed_max < spec.speed_min) throw Error("invalid speed range");
  if (!(spec.drift_onset >= 0.0 && spec.drift_onset <= 1.0)) throw Error("drift_onset must lie in [0, 1]");
  Rng rng(mix_seed(data_seed, 0xA11CE));
  World w;
  w.spec = spec;
  w.axis = random_unit(spec.feature_dim, rng);
  w.prototypes = Matrix(spec.num_classes, spec.feature_dim);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    Matrix p = gaussian_matrix(1, spec.feature_dim, spec.static_scale, rng);
    remove_along(p, w.axis);
    std::copy(p.data().begin(), p.data().end(), w.prototypes.row(c).begin());
  }
  return w;
}

GeneratorSpec World::stream_spec(int class_label, Rng& rng) const {
  GeneratorSpec g;
  g.duration = spec.duration;
  g.frame_rate = spec.frame_rate;
  g.noise_scale = spec.noise_scale;
  g.class_label = class_label;
  std::uniform_real_distribution<double> speed(spec.speed_min, spec.speed_max);
  g.speed = speed(rng);
  Matrix stat = gaussian_matrix(1, spec.feature_dim, spec.static_scale, rng);
  remove_along(stat, axis);
  if (spec.regime == Regime::TemporalDirection) {
    g.static_component = stat;
    g.drift_direction = axis * (class_label % 2 == 0 ? 1.0 : -1.0);
  } else {
    // Prototype plus a smaller per-stream perturbation; the drift sign is random.
    Matrix p(1, spec.feature_dim);
    for (std::size_t j = 0; j < spec.feature_dim; ++j)
      p[j] = prototypes(static_cast<std::size_t>(class_label), j) + 0.5 * stat[j];
    g.static_component = p;
    std::bernoulli_distribution flip(0.5);
    g.drift_direction = axis * (flip(rng) ? 1.0 : -1.0);
  }
  g.static_component -= g.drift_direction * (spec.drift_onset * spec.duration * g.speed);
  return g;
}

std::vector<Stream> World::make_streams(std::uint64_t data_seed, Split split, std::size_t count) const {
  std::vector<Stream> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t seed = mix_seed(mix_seed(data_seed, static_cast<std::uint64_t>(split)), i);
    Rng rng(seed);
    const int label = static_cast<int>(i % spec.num_classes);
    const GeneratorSpec g = stream_spec(label, rng);
    out.push_back(generate_stream(g, rng(), i));
  }
  return out;
}

void write_streams(const std::filesystem::path& path, std::span<const Stream> streams, const std::string& metadata) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const std::size_t frames = streams.empty() ? 0 : streams.front().frame_count();
  const std::size_t features = streams.empty() ? 0 : streams.front().feature_dim();
  for (const Stream& s : streams) {
    if (s.frame_count() != frames || s.feature_dim() != features) {
      throw ShapeError("write_streams: streams must share frame and feature counts");
    }
  }
  os.write(kStreamMagic, sizeof kStreamMagic);
  write_u64(os, streams.size());
  write_u64(os, frames);
  write_u64(os, features);
  for (const Stream& s : streams) write_u64(os, static_cast<std::uint64_t>(s.class_label()));
  write_f64(os, streams.empty() ? 0.0 : streams.front().frame_rate());
  for (const Stream& s : streams)
    for (double v : s.frames.data()) write_f64(os, v);
  write_string(os, metadata);
  if (!os) throw Error("write failed for " + path.string());
}

std::vector<Stream> read_streams(const std::filesystem::path& path, std::string* metadata) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || !std::equal(magic, magic + 8, kStreamMagic)) throw FormatError("not an LTNSTRM1 file: " + path.string());
  const std::uint64_t count = read_u64(is);
  const std::uint64_t frames = read_u64(is);
  const std::uint64_t features = read_u64(is);
  std::vector<std::uint64_t> labels(count);
  for (auto& l : labels) l = read_u64(is);
  const double rate = read_f64(is);
  std::vector<Stream> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    Stream s;
    s.id = i;
    s.spec.class_label = static_cast<int>(labels[i]);
    s.spec.frame_rate = rate;
    s.spec.duration = static_cast<double>(frames) / rate;
    s.frames = Matrix(frames, features);
    for (double& v : s.frames.data()) v = read_f64(is);
    out.push_back(std::move(s));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    std::string text = read_string(is);
    if (metadata) *metadata = std::move(text);
  }
  return out;
}

}  // namespace ltn
