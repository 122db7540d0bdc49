#include "ltn/navigation.hpp"

#include "ltn/errors.hpp"
#include "ltn/ops.hpp"

namespace ltn {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::None: return "none";
    case Variant::LinearAdd: return "v1";
    case Variant::Attention: return "v2";
    case Variant::LinearTransform: return "v3";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "none") return Variant::None;
  if (s == "v1") return Variant::LinearAdd;
  if (s == "v2") return Variant::Attention;
  if (s == "v3") return Variant::LinearTransform;
  throw ConfigError("variant", "expected none|v1|v2|v3, got '" + s + "'");
}

std::string to_string(AttentionMode m) { return m == AttentionMode::Hadamard ? "hadamard" : "projection"; }

AttentionMode parse_attention_mode(const std::string& s) {
  if (s == "hadamard") return AttentionMode::Hadamard;
  if (s == "projection") return AttentionMode::Projection;
  throw ConfigError("attention_mode", "expected hadamard|projection, got '" + s + "'");
}

bool uses_basis(Variant v) { return v == Variant::Attention || v == Variant::LinearTransform; }

TimeBlendedRep navigate(const NavigationConfig& config, Binder& bind, Var rep, Var t_start,
                        const TimeEncoder& enc, Var q) {
  const std::size_t dim = rep.cols();
  switch (config.variant) {
    case Variant::None:
      return {rep, rep, Var()};
    case Variant::LinearAdd: {
      if (enc.out_width() != dim) {
        throw ShapeError("linear addition needs a dim-wide time encoder (" + std::to_string(dim) + "), got " +
                         std::to_string(enc.out_width()));
      }
      const Var offset = encode_time(bind, enc, t_start, rep);
      return {add(rep, offset), rep, Var()};
    }
    case Variant::Attention:
    case Variant::LinearTransform:
      break;
  }
  if (!q.valid() || q.rows() != dim) {
    throw ShapeError("navigation basis does not match representation width " + std::to_string(dim));
  }
  if (enc.out_width() != q.cols()) {
    throw ShapeError("time encoder width " + std::to_string(enc.out_width()) + " != basis size " +
                     std::to_string(q.cols()));
  }
  const Var e = encode_time(bind, enc, t_start, rep);
  const Var qt = transpose(q);
  if (config.variant == Variant::LinearTransform) {
    return {add(rep, matmul(e, qt)), rep, e};
  }
  const Var w = softmax_rows(e);
  const Var u = matmul(w, qt);
  if (config.attention == AttentionMode::Hadamard) {
    return {hadamard(rep, u), rep, w};
  }
  const Var along = scale_rows(u, row_sums(hadamard(rep, u)));
  return {add(along, complement_residual(rep, q)), rep, w};
}

namespace {

BlendedValue run_single(Variant variant, AttentionMode mode, const Matrix& rep, TimeShift dt,
                        const TimeEncoder& enc, const Matrix* q) {
  if (rep.rows() != 1) throw ShapeError("single-sample navigation expects a 1 x dim row, got " + shape_str(rep));
  Tape tape;
  Binder bind(tape, false);
  const Var t = tape.constant(time_column({dt}));
  const Var qv = q ? tape.constant(*q) : Var();
  const TimeBlendedRep out = navigate({variant, mode}, bind, tape.constant(rep), t, enc, qv);
  return {out.blended.value(), out.original.value(), out.coords.valid() ? out.coords.value() : Matrix()};
}

}  // namespace

BlendedValue navigate_v1(const Matrix& rep, TimeShift dt, const TimeEncoder& enc) {
  return run_single(Variant::LinearAdd, AttentionMode::Hadamard, rep, dt, enc, nullptr);
}

BlendedValue navigate_v2(const Matrix& rep, TimeShift dt, const TimeEncoder& enc, const Matrix& q,
                         AttentionMode mode) {
  return run_single(Variant::Attention, mode, rep, dt, enc, &q);
}

BlendedValue navigate_v3(const Matrix& rep, TimeShift dt, const TimeEncoder& enc, const Matrix& q) {
  return run_single(Variant::LinearTransform, AttentionMode::Hadamard, rep, dt, enc, &q);
}

}  // namespace ltn
