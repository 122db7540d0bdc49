#pragma once

#include <vector>

#include "ltn/basis.hpp"
#include "ltn/config.hpp"
#include "ltn/contrastive.hpp"
#include "ltn/navigation.hpp"
#include "ltn/synthetic.hpp"
#include "ltn/time_encoder.hpp"

namespace ltn {

/// All learnable pieces of one LTN network. The momentum (key) network is a
/// second instance with identical shapes.
struct Network {
  ClipEncoder encoder;
  TimeEncoder time;
  OrthogonalBasis basis;
  ProjectionHead head;
  Linear predictor;  // negative-free framework only; 0 x 0 otherwise

  /// Initialization order is encoder, head, basis, time encoder, predictor,
  /// so variants sharing a seed share the common pieces.
  static Network create(const RunConfig& config, Rng& rng);

  /// Stable, named parameter list (checkpoint and optimizer order).
  std::vector<NamedParam> params();
};

/// A batch of query/key views with their stacked inputs.
struct Batch {
  std::vector<ViewSample> samples;
  Matrix query_frames;               // (n * clip_length) x F
  Matrix query_times;                // n x 1
  std::vector<Matrix> key_frames;    // P of (n * clip_length) x F
  std::vector<Matrix> key_times;     // P of n x 1

  std::size_t size() const noexcept { return samples.size(); }
};

Batch make_batch(std::vector<ViewSample> samples);

/// Orthonormalized basis, or the raw matrix when orthogonalization is disabled.
Var basis_view(Binder& bind, const Network& net, const RunConfig& config);

/// f and f' for stacked clips.
TimeBlendedRep embed(Binder& bind, const Network& net, const RunConfig& config, Var frames, Var times, Var q);

/// Unit-normalized projected keys (one n x proj_dim matrix per positive),
/// computed without gradient tracking.
std::vector<Matrix> encode_keys(const Network& key_net, const RunConfig& config, const Batch& batch);

struct LossTerms {
  Var loss;
  Var basis;        // the Q used this forward
  Var query_proj;   // unit-normalized projected queries
};

/// Objective of the online network for fixed keys and negatives.
LossTerms batch_loss(Binder& bind, const Network& net, const RunConfig& config, const Batch& batch,
                     std::span<const Matrix> keys, const Matrix& negatives);

}  // namespace ltn
