#include "ltn/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ltn/binary_io.hpp"
#include "ltn/errors.hpp"
#include "ltn/ops.hpp"

namespace ltn {
namespace {

constexpr char kCheckpointMagic[8] = {'L', 'T', 'N', 'C', 'K', 'P', 'T', '1'};

World world_for(const RunConfig& config) { return World::create(config.dataset(), config.seed); }

}  // namespace

std::string to_json_line(const StepMetrics& m) {
  nlohmann::ordered_json j;
  j["step"] = m.step;
  j["loss"] = m.loss;
  j["queue_size"] = m.queue_size;
  j["basis_orthogonality_error"] = m.basis_orthogonality_error;
  return j.dump();
}

std::string metrics_header(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["type"] = "header";
  j["seed"] = config.seed;
  j["config"] = config.to_text();
  return j.dump();
}

Trainer::Trainer(RunConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng init(mix_seed(config_.seed, 0x1417));
  online_ = Network::create(config_, init);
  shadow_ = online_;
  for (const NamedParam& p : online_.params()) velocity_.emplace_back(p.value->rows(), p.value->cols());
  queue_ = NegativeQueue(config_.queue_capacity, config_.proj_dim);
  rng_.seed(mix_seed(config_.seed, 0x5A3B));
  streams_ = world_for(config_).make_streams(config_.seed, Split::Train, config_.train_streams);
  // Prefill the queue with keys from the initial key network.
  if (config_.framework == Framework::MoCo) {
    while (queue_.size() < queue_.capacity()) {
      for (const Matrix& k : encode_keys(shadow_, config_, sample_batch())) queue_.enqueue(k);
    }
  }
}

Batch Trainer::sample_batch() {
  std::uniform_int_distribution<std::size_t> pick(0, streams_.size() - 1);
  std::vector<ViewSample> samples;
  samples.reserve(config_.batch_size);
  const Augmentation aug = config_.augmentation();
  for (std::size_t i = 0; i < config_.batch_size; ++i) {
    const Stream& s = streams_[pick(rng_)];
    samples.push_back(sample_views(s, config_.num_positives, config_.clip_length, config_.min_gap, aug, rng_));
  }
  return make_batch(std::move(samples));
}

StepMetrics Trainer::step() {
  const Batch batch = sample_batch();
  const std::vector<Matrix> keys = encode_keys(shadow_, config_, batch);
  const Matrix negatives = queue_.active();

  Tape tape;
  Binder bind(tape, true);
  const LossTerms terms = batch_loss(bind, online_, config_, batch, keys, negatives);
  const double loss = terms.loss.value()(0, 0);
  if (!std::isfinite(loss)) throw NumericalError("non-finite loss at step " + std::to_string(step_ + 1));
  tape.backward(terms.loss);

  StepMetrics metrics;
  metrics.basis_orthogonality_error = orthogonality_error(terms.basis.value());

  std::vector<NamedParam> params = online_.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i].value;
    Matrix& v = velocity_[i];
    const Var handle = bind.lookup(p);
    const Matrix g = handle.valid() ? handle.grad() : Matrix(p.rows(), p.cols());
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = config_.sgd_momentum * v[k] + g[k] + config_.weight_decay * p[k];
      p[k] -= config_.learning_rate * v[k];
    }
    if (!p.all_finite()) {
      throw NumericalError("parameter '" + params[i].name + "' diverged at step " + std::to_string(step_ + 1));
    }
  }

  const std::vector<NamedParam> shadow_params = shadow_.params();
  momentum_update(shadow_params, online_.params(), config_.momentum);
  if (config_.framework == Framework::MoCo) {
    for (const Matrix& k : keys) queue_.enqueue(k);
  }

  ++step_;
  metrics.step = step_;
  metrics.loss = loss;
  metrics.queue_size = queue_.size();
  return metrics;
}

std::vector<StepMetrics> Trainer::run(std::size_t steps, const std::function<void(const StepMetrics&)>& on_step) {
  std::vector<StepMetrics> out;
  out.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    out.push_back(step());
    if (on_step) on_step(out.back());
  }
  return out;
}

void Trainer::save(const std::filesystem::path& checkpoint) const {
  std::ofstream os(checkpoint, std::ios::binary);
  if (!os) throw Error("cannot open " + checkpoint.string() + " for writing");
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  write_string(os, config_.to_text());
  write_u64(os, step_);
  auto write_params = [&](std::vector<NamedParam> params) {
    write_u64(os, params.size());
    for (const NamedParam& p : params) {
      write_string(os, p.name);
      write_matrix(os, *p.value);
    }
  };
  write_params(const_cast<Network&>(online_).params());
  write_params(const_cast<Network&>(shadow_).params());
  write_u64(os, velocity_.size());
  for (const Matrix& v : velocity_) write_matrix(os, v);
  write_u64(os, queue_.size());
  write_u64(os, queue_.cursor());
  write_matrix(os, queue_.buffer());
  std::ostringstream rng_state;
  rng_state << rng_;
  write_string(os, rng_state.str());
  if (!os) throw Error("write failed for " + checkpoint.string());
}

Trainer Trainer::load(const std::filesystem::path& checkpoint) {
  std::ifstream is(checkpoint, std::ios::binary);
  if (!is) throw Error("cannot open " + checkpoint.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || !std::equal(magic, magic + 8, kCheckpointMagic)) {
    throw FormatError("not an LTNCKPT1 checkpoint: " + checkpoint.string());
  }
  Trainer t(Uninitialized{});
  t.config_ = parse_config(read_string(is));
  t.step_ = read_u64(is);
  Rng scratch(0);
  t.online_ = Network::create(t.config_, scratch);
  t.shadow_ = t.online_;
  auto read_params = [&](std::vector<NamedParam> params) {
    if (read_u64(is) != params.size()) throw FormatError("checkpoint parameter count mismatch");
    for (const NamedParam& p : params) {
      if (read_string(is) != p.name) throw FormatError("checkpoint parameter order mismatch at " + p.name);
      Matrix m = read_matrix(is);
      if (!m.same_shape(*p.value)) throw FormatError("checkpoint shape mismatch at " + p.name);
      *p.value = std::move(m);
    }
  };
  read_params(t.online_.params());
  read_params(t.shadow_.params());
  const std::uint64_t nvel = read_u64(is);
  if (nvel != t.online_.params().size()) throw FormatError("checkpoint velocity count mismatch");
  for (std::uint64_t i = 0; i < nvel; ++i) t.velocity_.push_back(read_matrix(is));
  const std::uint64_t qsize = read_u64(is);
  const std::uint64_t qcursor = read_u64(is);
  Matrix qbuf = read_matrix(is);
  if (qbuf.rows() != t.config_.queue_capacity || qbuf.cols() != t.config_.proj_dim) {
    throw FormatError("checkpoint queue shape mismatch");
  }
  t.queue_.restore(std::move(qbuf), qsize, qcursor);
  std::istringstream rng_state(read_string(is));
  rng_state >> t.rng_;
  if (!rng_state) throw FormatError("checkpoint RNG state unreadable");
  t.streams_ = world_for(t.config_).make_streams(t.config_.seed, Split::Train, t.config_.train_streams);
  return t;
}

}  // namespace ltn
