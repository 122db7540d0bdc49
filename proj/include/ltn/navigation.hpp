#pragma once

#include <string>

#include "ltn/basis.hpp"
#include "ltn/time_encoder.hpp"

namespace ltn {

enum class Variant {
  None,             // f' = f
  LinearAdd,        // f' = f + e_t(dt, f), e_t is dim-wide
  Attention,        // W = softmax(e_t), f' = f (.) (W Q^T)
  LinearTransform,  // A = e_t, f' = f + A Q^T
};

/// How the attention variant combines f with u = W Q^T.
enum class AttentionMode {
  Hadamard,    // f' = f (.) u
  Projection,  // f' = (f . u) u + complement_residual(f, Q)
};

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);
std::string to_string(AttentionMode m);
AttentionMode parse_attention_mode(const std::string& s);

/// True when the variant consumes a basis (Attention, LinearTransform).
bool uses_basis(Variant v);

struct NavigationConfig {
  Variant variant = Variant::LinearTransform;
  AttentionMode attention = AttentionMode::Hadamard;
};

/// f' and the pre-navigation f it was computed from. `coords` holds W or A
/// for the basis variants and is invalid otherwise.
struct TimeBlendedRep {
  Var blended;
  Var original;
  Var coords;
};

/// Batched navigation. `q` is the orthonormalized (or raw, for the
/// no-orthogonalization ablation) dim x M basis; ignored by None/LinearAdd.
TimeBlendedRep navigate(const NavigationConfig& config, Binder& bind, Var rep, Var t_start,
                        const TimeEncoder& enc, Var q);

/// Single-sample variants over plain matrices; `q` is the basis used as-is.
struct BlendedValue {
  Matrix blended;
  Matrix original;
  Matrix coords;
};

BlendedValue navigate_v1(const Matrix& rep, TimeShift dt, const TimeEncoder& enc);
BlendedValue navigate_v2(const Matrix& rep, TimeShift dt, const TimeEncoder& enc, const Matrix& q,
                         AttentionMode mode = AttentionMode::Hadamard);
BlendedValue navigate_v3(const Matrix& rep, TimeShift dt, const TimeEncoder& enc, const Matrix& q);

}  // namespace ltn
