#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seginr/core.hpp"
#include "seginr/io.hpp"
#include "seginr/net.hpp"
#include "seginr/numerics.hpp"
#include "seginr/rng.hpp"

namespace seginr {

struct TrainConfig {
  std::int32_t i_pad = 20;   // padding horizon; must exceed every duration
  double lr = 1e-3;
  std::int64_t max_steps = 30000;
  std::int32_t batch_size = 8;
  std::uint64_t seed = 0;    // batch sampling order
  std::int64_t checkpoint_interval = 0;  // steps between rolling saves; 0 = none
  std::string checkpoint_path;           // rolling save target
  bool padded = true;  // false: supervise only up to the first ∅ per row
};

struct TrainingBatch {
  Matrix time_idx;
  PaddedTargetMatrix targets;
};

// Pseudo-sequential batch for one example: every text position gets the
// same [0, i_pad) index row, and the target matrix carries ∅ from each
// segment's end onward.
inline TrainingBatch make_training_batch(const Example& example, std::int32_t i_pad,
                                         const VocabSpec& vocab) {
  TrainingBatch b;
  b.targets = build_padded_targets(example.target, i_pad, vocab);
  b.time_idx = time_index_grid(example.target.size(), i_pad);
  return b;
}

struct BatchGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

// Gradient of the mean cell loss over a batch. Per-example sums are reduced
// in batch order before the final division, so a duplicated example yields
// exactly the gradient of the single one.
inline BatchGradient batch_backward(std::span<const Example* const> batch,
                                    const ModelParams& model, std::int32_t i_pad,
                                    LossMask mask) {
  BatchGradient out;
  out.grad.assign(model.params.size(), 0.0);
  std::vector<double> scratch(model.params.size());
  double loss_sum = 0.0;
  std::int64_t cells = 0;
  for (const Example* ex : batch) {
    const TrainingBatch b = make_training_batch(*ex, i_pad, model.cfg.vocab);
    const LossStats s = backward_accumulate(ex->tokens, b.targets, model, mask, scratch);
    for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad[k] += scratch[k];
    loss_sum += s.loss_sum;
    cells += s.cells;
  }
  out.loss = loss_sum / static_cast<double>(cells);
  for (double& v : out.grad) v /= static_cast<double>(cells);
  return out;
}

// ─── Checkpoint format ──────────────────────────────────────────────────────
//
// magic "SGNR" | u32 version=1 | u32 V_x, |Y|, D, H, enc_layers,
// siren_layers, window, flags (bit 0: Adam state present) | f64 w0 |
// every parameter view in layout order as f64 LE | optional Adam state
// (m array, v array, u64 t). Round trips are bit-exact.

inline constexpr char kCheckpointMagic[4] = {'S', 'G', 'N', 'R'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const ModelParams& model, const AdamState* adam,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kCheckpointMagic, 4);
  write_u32le(out, kCheckpointVersion);
  const ModelConfig& cfg = model.cfg;
  write_u32le(out, static_cast<std::uint32_t>(cfg.vocab.input_size));
  write_u32le(out, static_cast<std::uint32_t>(cfg.vocab.output_size));
  write_u32le(out, static_cast<std::uint32_t>(cfg.embed_dim));
  write_u32le(out, static_cast<std::uint32_t>(cfg.hidden));
  write_u32le(out, static_cast<std::uint32_t>(cfg.enc_layers));
  write_u32le(out, static_cast<std::uint32_t>(cfg.siren_layers));
  write_u32le(out, static_cast<std::uint32_t>(cfg.window));
  write_u32le(out, adam ? 1u : 0u);
  write_f64le(out, cfg.w0);
  for (double v : model.params.values()) write_f64le(out, v);
  if (adam) {
    for (double v : adam->m) write_f64le(out, v);
    for (double v : adam->v) write_f64le(out, v);
    write_u64le(out, adam->t);
  }
  if (!out) throw IoError("write failed: '" + path + "'");
}

struct LoadedCheckpoint {
  ModelParams model;
  std::optional<AdamState> adam;  // hyperparameters are not stored; defaults apply
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4)) throw TruncatedFile("'" + path + "' shorter than its header");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw BadMagic("'" + path + "' is not a checkpoint file");
  const std::uint32_t version = read_u32le(in);
  if (version != kCheckpointVersion)
    throw BadVersion("unsupported checkpoint version " + std::to_string(version));
  ModelConfig cfg;
  cfg.vocab.input_size = static_cast<TokenId>(read_u32le(in));
  cfg.vocab.output_size = static_cast<TokenId>(read_u32le(in));
  cfg.embed_dim = static_cast<std::int32_t>(read_u32le(in));
  cfg.hidden = static_cast<std::int32_t>(read_u32le(in));
  cfg.enc_layers = static_cast<std::int32_t>(read_u32le(in));
  cfg.siren_layers = static_cast<std::int32_t>(read_u32le(in));
  cfg.window = static_cast<std::int32_t>(read_u32le(in));
  const std::uint32_t flags = read_u32le(in);
  cfg.w0 = read_f64le(in);

  LoadedCheckpoint ck{make_model(cfg), std::nullopt};
  for (double& v : ck.model.params.values()) v = read_f64le(in);
  if (flags & 1u) {
    AdamState state(ck.model.params.size());
    for (double& v : state.m) v = read_f64le(in);
    for (double& v : state.v) v = read_f64le(in);
    state.t = read_u64le(in);
    ck.adam = std::move(state);
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw Error("trailing bytes after checkpoint payload in '" + path + "'");
  return ck;
}

struct TrainResult {
  std::vector<double> loss_trace;  // mean cell loss per step
  AdamState adam;
};

// Step-based training loop. Deterministic given (dataset, config, seed):
// batches are drawn from a seeded stream, gradients are reduced in batch
// order, and one thread owns the parameters throughout. Aborts on the first
// non-finite loss.
inline TrainResult train(const std::vector<Example>& dataset, ModelParams& model,
                         const TrainConfig& cfg) {
  if (dataset.empty()) throw Error("train: empty dataset");
  if (cfg.batch_size < 1) throw Error("train: batch size must be >= 1");
  for (std::size_t idx = 0; idx < dataset.size(); ++idx)
    for (const Segment& s : dataset[idx].target.segments)
      if (s.duration() >= cfg.i_pad)
        throw PadTooSmall("dataset example " + std::to_string(idx) + " has duration " +
                          std::to_string(s.duration()) + " >= i_pad " +
                          std::to_string(cfg.i_pad));

  Rng rng(cfg.seed);
  AdamState adam(model.params.size(), cfg.lr);
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(cfg.max_steps));
  std::vector<const Example*> batch(static_cast<std::size_t>(cfg.batch_size));
  const LossMask mask = cfg.padded ? LossMask::full : LossMask::to_first_null;

  for (std::int64_t step = 1; step <= cfg.max_steps; ++step) {
    for (auto& slot : batch)
      slot = &dataset[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(dataset.size()) - 1))];
    const BatchGradient bg = batch_backward(batch, model, cfg.i_pad, mask);
    if (!std::isfinite(bg.loss)) throw NonFiniteLoss(step);
    adam_step(model.params.values(), bg.grad, adam);
    trace.push_back(bg.loss);
    if (cfg.checkpoint_interval > 0 && !cfg.checkpoint_path.empty() &&
        step % cfg.checkpoint_interval == 0)
      save_checkpoint(model, &adam, cfg.checkpoint_path);
  }
  return TrainResult{std::move(trace), std::move(adam)};
}

}  // namespace seginr
