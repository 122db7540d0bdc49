#include "ltn/model.hpp"

#include "ltn/errors.hpp"
#include "ltn/ops.hpp"

namespace ltn {

Network Network::create(const RunConfig& config, Rng& rng) {
  Network net;
  net.encoder = ClipEncoder::random(config.feature_dim, config.dim, config.dim, rng);
  net.head = ProjectionHead::random(config.dim, config.proj_dim, rng);
  net.basis = OrthogonalBasis::random(config.dim, config.basis_size, rng);
  TimeEncoderShape shape;
  shape.rep_dim = config.dim;
  shape.out_width = config.variant == Variant::LinearAdd ? config.dim : config.basis_size;
  shape.inner_width = config.te_inner_width;
  shape.hidden_width = config.te_width;
  shape.layers = config.te_layers;
  shape.time_scale = config.duration;
  net.time = TimeEncoder::random(shape, rng);
  if (config.framework == Framework::Byol) {
    net.predictor = Linear::random(config.proj_dim, config.proj_dim, 1.0, rng);
  }
  return net;
}

std::vector<NamedParam> Network::params() {
  std::vector<NamedParam> out;
  encoder.append_params(out, "encoder");
  time.append_params(out, "time");
  out.push_back({"basis.raw", &basis.raw});
  head.append_params(out, "head");
  if (!predictor.weight.empty()) append_params(out, "predictor", predictor);
  return out;
}

Batch make_batch(std::vector<ViewSample> samples) {
  if (samples.empty()) throw Error("empty batch");
  const std::size_t p = samples.front().keys.size();
  Batch b;
  std::vector<const ClipView*> views;
  std::vector<TimeShift> times;
  for (const auto& s : samples) {
    if (s.keys.size() != p) throw Error("batch samples disagree on the number of positives");
    views.push_back(&s.query);
    times.push_back(s.query.dt);
  }
  b.query_frames = stack_clips(views);
  b.query_times = time_column(times);
  for (std::size_t k = 0; k < p; ++k) {
    views.clear();
    times.clear();
    for (const auto& s : samples) {
      views.push_back(&s.keys[k]);
      times.push_back(s.keys[k].dt);
    }
    b.key_frames.push_back(stack_clips(views));
    b.key_times.push_back(time_column(times));
  }
  b.samples = std::move(samples);
  return b;
}

Var basis_view(Binder& bind, const Network& net, const RunConfig& config) {
  const Var raw = bind(net.basis.raw);
  return config.orthogonalize ? orthogonalize(raw, config.basis_gradient) : raw;
}

TimeBlendedRep embed(Binder& bind, const Network& net, const RunConfig& config, Var frames, Var times, Var q) {
  const Var f = encode_clips(bind, net.encoder, frames, config.clip_length);
  return navigate({config.variant, config.attention_mode}, bind, f, times, net.time, q);
}

std::vector<Matrix> encode_keys(const Network& key_net, const RunConfig& config, const Batch& batch) {
  Tape tape;
  Binder bind(tape, false);
  const Var q = uses_basis(config.variant) ? basis_view(bind, key_net, config) : Var();
  std::vector<Matrix> keys;
  keys.reserve(batch.key_frames.size());
  for (std::size_t k = 0; k < batch.key_frames.size(); ++k) {
    const TimeBlendedRep rep =
        embed(bind, key_net, config, tape.constant(batch.key_frames[k]), tape.constant(batch.key_times[k]), q);
    keys.push_back(l2_normalize_rows(project(bind, key_net.head, rep.blended)).value());
  }
  return keys;
}

LossTerms batch_loss(Binder& bind, const Network& net, const RunConfig& config, const Batch& batch,
                     std::span<const Matrix> keys, const Matrix& negatives) {
  Tape& tape = bind.tape();
  LossTerms out;
  out.basis = basis_view(bind, net, config);
  const Var q = uses_basis(config.variant) ? out.basis : Var();
  const TimeBlendedRep rep =
      embed(bind, net, config, tape.constant(batch.query_frames), tape.constant(batch.query_times), q);
  const Var proj = project(bind, net.head, rep.blended);
  out.query_proj = l2_normalize_rows(proj);
  if (config.framework == Framework::Byol) {
    out.loss = cosine_regression(apply(bind, net.predictor, proj), keys);
  } else {
    out.loss = info_nce(out.query_proj, keys, negatives, config.temperature, config.denominator);
  }
  return out;
}

}  // namespace ltn
