#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seginr/core.hpp"
#include "seginr/matrix.hpp"
#include "seginr/numerics.hpp"
#include "seginr/param_vector.hpp"
#include "seginr/rng.hpp"

namespace seginr {

// Model dimensions. Desk-scale defaults; larger configurations load through
// the same fields.
struct ModelConfig {
  VocabSpec vocab;
  std::int32_t embed_dim = 64;    // conditioning embedding width
  std::int32_t hidden = 64;       // sine-network hidden width
  std::int32_t enc_layers = 2;    // context-mixing layers in the text encoder
  std::int32_t siren_layers = 3;  // sine-activated layers
  std::int32_t window = 1;        // encoder context half-width per layer
  double w0 = 1.0;                // sine activation frequency

  std::int32_t joint_size() const { return vocab.joint_size(); }

  void validate() const {
    vocab.validate();
    if (embed_dim < 1 || hidden < 1 || siren_layers < 1 || enc_layers < 0 || window < 0)
      throw Error("invalid model dimensions");
    if (!(w0 > 0.0)) throw Error("w0 must be positive");
  }
};

// View ids into the ParamVector, in checkpoint order.
struct ParamLayout {
  std::size_t embedding = 0;
  std::vector<std::size_t> enc_weight;
  std::vector<std::size_t> enc_bias;
  std::size_t mod_weight = 0;
  std::vector<std::size_t> siren_weight;
  std::vector<std::size_t> siren_bias;
  std::size_t head_weight = 0;
  std::size_t head_bias = 0;
};

struct ModelParams {
  ModelConfig cfg;
  ParamVector params;
  ParamLayout layout;
};

// Zero-valued model with the canonical view layout: embedding,
// enc<k>.{weight,bias}, modulation.weight, siren<k>.{weight,bias},
// head.{weight,bias}.
inline ModelParams make_model(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams m;
  m.cfg = cfg;
  ParamVector& p = m.params;
  const auto D = static_cast<std::size_t>(cfg.embed_dim);
  const auto H = static_cast<std::size_t>(cfg.hidden);
  const std::size_t win = 2 * static_cast<std::size_t>(cfg.window) + 1;
  m.layout.embedding = p.add_view("embedding", static_cast<std::size_t>(cfg.vocab.input_size), D);
  for (std::int32_t k = 0; k < cfg.enc_layers; ++k) {
    const std::string base = "enc" + std::to_string(k);
    m.layout.enc_weight.push_back(p.add_view(base + ".weight", D, win * D));
    m.layout.enc_bias.push_back(p.add_view(base + ".bias", D, 1));
  }
  m.layout.mod_weight =
      p.add_view("modulation.weight", static_cast<std::size_t>(cfg.siren_layers) * H, D);
  for (std::int32_t k = 0; k < cfg.siren_layers; ++k) {
    const std::string base = "siren" + std::to_string(k);
    m.layout.siren_weight.push_back(p.add_view(base + ".weight", H, k == 0 ? 1 : H));
    m.layout.siren_bias.push_back(p.add_view(base + ".bias", H, 1));
  }
  m.layout.head_weight =
      p.add_view("head.weight", static_cast<std::size_t>(cfg.joint_size()), H);
  m.layout.head_bias = p.add_view("head.bias", static_cast<std::size_t>(cfg.joint_size()), 1);
  return m;
}

// Sine-network initialization: first sine layer uniform ±1/fan_in, later
// sine layers uniform ±sqrt(6/fan_in)/w0, all other weights uniform
// ±1/sqrt(fan_in), biases zero.
inline ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams m = make_model(cfg);
  Rng rng(seed);
  auto fill = [&](std::size_t view_id, double bound) {
    for (double& w : m.params.view(view_id)) w = rng.uniform(-bound, bound);
  };
  fill(m.layout.embedding, 1.0 / std::sqrt(static_cast<double>(cfg.vocab.input_size)));
  const double enc_fan_in = static_cast<double>((2 * cfg.window + 1) * cfg.embed_dim);
  for (std::size_t id : m.layout.enc_weight) fill(id, 1.0 / std::sqrt(enc_fan_in));
  fill(m.layout.mod_weight, 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim)));
  for (std::int32_t k = 0; k < cfg.siren_layers; ++k) {
    if (k == 0)
      fill(m.layout.siren_weight[0], 1.0);
    else
      fill(m.layout.siren_weight[static_cast<std::size_t>(k)],
           std::sqrt(6.0 / static_cast<double>(cfg.hidden)) / cfg.w0);
  }
  fill(m.layout.head_weight, 1.0 / std::sqrt(static_cast<double>(cfg.hidden)));
  return m;
}

namespace detail {

// Concatenate the 2w+1 neighbor rows of h around each position; positions
// outside the sequence read zeros.
inline Matrix window_concat(const Matrix& h, std::int32_t w) {
  const std::size_t U = h.rows, D = h.cols;
  const std::size_t win = 2 * static_cast<std::size_t>(w) + 1;
  Matrix out(U, win * D);
  for (std::size_t u = 0; u < U; ++u) {
    for (std::int32_t o = -w; o <= w; ++o) {
      const std::int64_t v = static_cast<std::int64_t>(u) + o;
      if (v < 0 || v >= static_cast<std::int64_t>(U)) continue;
      std::copy_n(h.row(static_cast<std::size_t>(v)), D,
                  out.row(u) + static_cast<std::size_t>(o + w) * D);
    }
  }
  return out;
}

inline void sin_cos(double x, double* s, double* c) {
#if defined(__GLIBC__)
  ::sincos(x, s, c);
#else
  *s = std::sin(x);
  *c = std::cos(x);
#endif
}

// a := sin(w0·a); when cos_out is given it receives cos(w0·a) for backward.
inline void sine_inplace(Matrix& a, double w0, Matrix* cos_out) {
  if (cos_out) {
    *cos_out = Matrix(a.rows, a.cols);
    for (std::size_t k = 0; k < a.data.size(); ++k) {
      double s, c;
      sin_cos(w0 * a.data[k], &s, &c);
      a.data[k] = s;
      cos_out->data[k] = c;
    }
  } else {
    for (double& v : a.data) v = std::sin(w0 * v);
  }
}

}  // namespace detail

struct EncodeTrace {
  // acts[0] is the embedding lookup; acts[k+1] the output of mixing layer k.
  std::vector<Matrix> acts;
};

// Text encoder: embedding lookup followed by enc_layers windowed mixing
// layers with tanh. Row u of the result depends only on tokens within
// distance enc_layers·window of u.
inline Matrix encode(const TokenSequence& x, const ModelParams& model,
                     EncodeTrace* trace = nullptr) {
  const ModelConfig& cfg = model.cfg;
  if (x.empty()) throw Error("encode: empty token sequence");
  for (TokenId t : x)
    if (t < 0 || t >= cfg.vocab.input_size)
      throw BadToken("token id " + std::to_string(t) + " outside [0, " +
                     std::to_string(cfg.vocab.input_size) + ")");
  const std::size_t U = x.size();
  const auto D = static_cast<std::size_t>(cfg.embed_dim);
  const ParamVector& p = model.params;

  Matrix h(U, D);
  std::span<const double> emb = p.view(model.layout.embedding);
  for (std::size_t u = 0; u < U; ++u)
    std::copy_n(emb.data() + static_cast<std::size_t>(x[u]) * D, D, h.row(u));
  if (trace) trace->acts.push_back(h);

  for (std::int32_t k = 0; k < cfg.enc_layers; ++k) {
    const Matrix a = detail::window_concat(h, cfg.window);
    const auto ki = static_cast<std::size_t>(k);
    Matrix pre(U, D);
    linear_forward(a, p.view(model.layout.enc_weight[ki]).data(), D,
                   p.view(model.layout.enc_bias[ki]).data(), pre);
    for (double& v : pre.data) v = std::tanh(v);
    h = std::move(pre);
    if (trace) trace->acts.push_back(h);
  }
  return h;
}

// Row u = [0, 1, …, n−1]: the pseudo time-index grid shared by training and
// parallel decoding.
inline Matrix time_index_grid(std::size_t rows, std::int32_t n) {
  Matrix t(rows, static_cast<std::size_t>(n));
  for (std::size_t u = 0; u < rows; ++u)
    for (std::int32_t i = 0; i < n; ++i) t.at(u, static_cast<std::size_t>(i)) = i;
  return t;
}

struct SirenTrace {
  Matrix shifts;             // U × (siren_layers·H)
  std::vector<Matrix> act;   // per layer: (U·n) × H, sin(w0·a)
  std::vector<Matrix> cosv;  // per layer: (U·n) × H, cos(w0·a)
};

// Evaluate the sine network over a (U × n) grid of time indices. Row u of
// time_idx holds the scalar inputs for text position u; the returned logits
// have one row per grid cell, u-major. Cell (u, i) depends only on
// time_idx(u, i) and e.row(u).
//
// Per layer: a = W·h_prev + b + shift_k(e_u), h = sin(w0·a), where the
// shifts come from one linear map of the conditioning embedding. The first
// layer reads the scalar time index; the head is affine over the last
// hidden layer.
inline Matrix forward_batch(const Matrix& time_idx, const Matrix& e, const ModelParams& model,
                            SirenTrace* trace = nullptr) {
  const ModelConfig& cfg = model.cfg;
  const std::size_t U = time_idx.rows, n = time_idx.cols;
  const auto D = static_cast<std::size_t>(cfg.embed_dim);
  const auto H = static_cast<std::size_t>(cfg.hidden);
  const auto L = static_cast<std::size_t>(cfg.siren_layers);
  const auto J = static_cast<std::size_t>(cfg.joint_size());
  if (e.rows != U || e.cols != D)
    throw LengthMismatch("forward_batch: embedding matrix is " + std::to_string(e.rows) + "x" +
                         std::to_string(e.cols) + ", expected " + std::to_string(U) + "x" +
                         std::to_string(D));
  const std::size_t cells = U * n;
  const ParamVector& p = model.params;

  Matrix shifts(U, L * H);
  linear_forward(e, p.view(model.layout.mod_weight).data(), L * H, nullptr, shifts);

  std::vector<Matrix> act(L);
  std::vector<Matrix> cosv(trace ? L : 0);

  {  // first layer: scalar time index in, H units out
    std::span<const double> w = p.view(model.layout.siren_weight[0]);
    std::span<const double> b = p.view(model.layout.siren_bias[0]);
    Matrix a(cells, H);
    for (std::size_t u = 0; u < U; ++u) {
      const double* srow = shifts.row(u);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = time_idx.at(u, i);
        double* arow = a.row(u * n + i);
        for (std::size_t hh = 0; hh < H; ++hh) arow[hh] = w[hh] * t + b[hh] + srow[hh];
      }
    }
    detail::sine_inplace(a, cfg.w0, trace ? &cosv[0] : nullptr);
    act[0] = std::move(a);
  }

  for (std::size_t k = 1; k < L; ++k) {
    std::span<const double> w = p.view(model.layout.siren_weight[k]);
    std::span<const double> b = p.view(model.layout.siren_bias[k]);
    Matrix a(cells, H);
    linear_forward(act[k - 1], w.data(), H, nullptr, a);
    for (std::size_t u = 0; u < U; ++u) {
      const double* srow = shifts.row(u) + k * H;
      for (std::size_t i = 0; i < n; ++i) {
        double* arow = a.row(u * n + i);
        for (std::size_t hh = 0; hh < H; ++hh) arow[hh] += b[hh] + srow[hh];
      }
    }
    detail::sine_inplace(a, cfg.w0, trace ? &cosv[k] : nullptr);
    act[k] = std::move(a);
  }

  Matrix logits(cells, J);
  linear_forward(act[L - 1], p.view(model.layout.head_weight).data(), J,
                 p.view(model.layout.head_bias).data(), logits);

  if (trace) {
    trace->shifts = std::move(shifts);
    trace->act = std::move(act);
    trace->cosv = std::move(cosv);
  }
  return logits;
}

// Joint-space logits for a single (time index, embedding) pair. Runs through
// the same kernels as forward_batch, so a 1×1 grid matches it bit-for-bit.
inline std::vector<double> siren_forward(double i, std::span<const double> e_u,
                                         const ModelParams& model) {
  Matrix t(1, 1);
  t.at(0, 0) = i;
  Matrix e(1, e_u.size());
  std::copy(e_u.begin(), e_u.end(), e.row(0));
  Matrix logits = forward_batch(t, e, model);
  return std::move(logits.data);
}

enum class LossMask {
  full,           // every grid cell is supervised (∅-padded training)
  to_first_null,  // only cells up to and including the first ∅ of each row
};

struct LossStats {
  double loss_sum = 0.0;
  std::int64_t cells = 0;
};

namespace detail {

inline bool cell_included(LossMask mask, std::int32_t i, std::int32_t first_null) {
  return mask == LossMask::full || i <= first_null;
}

}  // namespace detail

// Mean cross-entropy over the supervised cells of one example; forward only.
inline double batch_loss(const TokenSequence& x, const PaddedTargetMatrix& targets,
                         const ModelParams& model, LossMask mask = LossMask::full) {
  const ModelConfig& cfg = model.cfg;
  if (x.size() != targets.rows) throw LengthMismatch("batch_loss: target rows != token count");
  const std::size_t U = targets.rows;
  const auto n = static_cast<std::size_t>(targets.i_pad);
  const Matrix e = encode(x, model);
  const Matrix time = time_index_grid(U, targets.i_pad);
  const Matrix logits = forward_batch(time, e, model);
  std::vector<double> scratch(static_cast<std::size_t>(cfg.joint_size()));
  double loss_sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t u = 0; u < U; ++u) {
    const std::int32_t first_null = duration_from_row(targets.row(u), cfg.vocab.null_id());
    for (std::size_t i = 0; i < n; ++i) {
      if (!detail::cell_included(mask, static_cast<std::int32_t>(i), first_null)) continue;
      loss_sum += cross_entropy_into(logits.row_span(u * n + i),
                                     targets.at(u, static_cast<std::int32_t>(i)), scratch);
      ++count;
    }
  }
  return loss_sum / static_cast<double>(count);
}

// Full manual backward pass for one example. Writes per-example gradient
// sums (not yet divided by the cell count) into grad and returns the summed
// loss plus the number of supervised cells, so batches of mixed lengths can
// be averaged by total cell count.
inline LossStats backward_accumulate(const TokenSequence& x, const PaddedTargetMatrix& targets,
                                     const ModelParams& model, LossMask mask,
                                     std::span<double> grad) {
  const ModelConfig& cfg = model.cfg;
  if (x.size() != targets.rows)
    throw LengthMismatch("backward: target rows != token count");
  if (grad.size() != model.params.size())
    throw LengthMismatch("backward: gradient buffer size mismatch");
  const std::size_t U = targets.rows;
  const auto n = static_cast<std::size_t>(targets.i_pad);
  const auto D = static_cast<std::size_t>(cfg.embed_dim);
  const auto H = static_cast<std::size_t>(cfg.hidden);
  const auto L = static_cast<std::size_t>(cfg.siren_layers);
  const auto J = static_cast<std::size_t>(cfg.joint_size());
  const std::size_t cells = U * n;
  const ParamVector& p = model.params;
  std::fill(grad.begin(), grad.end(), 0.0);

  EncodeTrace etrace;
  const Matrix e = encode(x, model, &etrace);
  const Matrix time = time_index_grid(U, targets.i_pad);
  SirenTrace strace;
  const Matrix logits = forward_batch(time, e, model, &strace);

  auto g = [&](std::size_t view_id) {
    const ParamView& v = model.params.view_spec(view_id);
    return grad.subspan(v.offset, v.size());
  };

  // Loss and dL/dlogits; masked-out cells keep an all-zero gradient row.
  LossStats stats;
  Matrix dlogits(cells, J);
  for (std::size_t u = 0; u < U; ++u) {
    const std::int32_t first_null = duration_from_row(targets.row(u), cfg.vocab.null_id());
    for (std::size_t i = 0; i < n; ++i) {
      if (!detail::cell_included(mask, static_cast<std::int32_t>(i), first_null)) continue;
      stats.loss_sum += cross_entropy_into(logits.row_span(u * n + i),
                                           targets.at(u, static_cast<std::int32_t>(i)),
                                           dlogits.row_span(u * n + i));
      stats.cells += 1;
    }
  }

  // Head.
  linear_backward_params(dlogits, strace.act[L - 1], g(model.layout.head_weight).data(),
                         g(model.layout.head_bias).data());
  Matrix dact(cells, H);
  linear_backward_input(dlogits, p.view(model.layout.head_weight).data(), dact);

  // Sine layers, top down: da = dact ⊙ w0·cos(w0·a).
  Matrix dshifts(U, L * H);
  for (std::size_t k = L; k-- > 0;) {
    const Matrix& cosk = strace.cosv[k];
    Matrix da(cells, H);
    for (std::size_t idx = 0; idx < da.data.size(); ++idx)
      da.data[idx] = dact.data[idx] * (cfg.w0 * cosk.data[idx]);

    std::span<double> gb = g(model.layout.siren_bias[k]);
    for (std::size_t u = 0; u < U; ++u) {
      double* ds = dshifts.row(u) + k * H;
      for (std::size_t i = 0; i < n; ++i) {
        const double* dar = da.row(u * n + i);
        for (std::size_t hh = 0; hh < H; ++hh) ds[hh] += dar[hh];
      }
      for (std::size_t hh = 0; hh < H; ++hh) gb[hh] += ds[hh];
    }

    if (k == 0) {
      std::span<double> gw = g(model.layout.siren_weight[0]);
      for (std::size_t u = 0; u < U; ++u) {
        for (std::size_t i = 0; i < n; ++i) {
          const double t = time.at(u, i);
          const double* dar = da.row(u * n + i);
          for (std::size_t hh = 0; hh < H; ++hh) gw[hh] += dar[hh] * t;
        }
      }
    } else {
      linear_backward_params(da, strace.act[k - 1], g(model.layout.siren_weight[k]).data(),
                             nullptr);
      Matrix dprev(cells, H);
      linear_backward_input(da, p.view(model.layout.siren_weight[k]).data(), dprev);
      dact = std::move(dprev);
    }
  }

  // Modulation map: shifts = e · modᵀ.
  linear_backward_params(dshifts, e, g(model.layout.mod_weight).data(), nullptr);
  Matrix de(U, D);
  linear_backward_input(dshifts, p.view(model.layout.mod_weight).data(), de);

  // Encoder, top down through tanh and the window concat.
  const std::size_t win = 2 * static_cast<std::size_t>(cfg.window) + 1;
  for (std::int32_t k = cfg.enc_layers; k-- > 0;) {
    const auto ki = static_cast<std::size_t>(k);
    const Matrix& out = etrace.acts[ki + 1];
    Matrix dpre(U, D);
    for (std::size_t idx = 0; idx < dpre.data.size(); ++idx)
      dpre.data[idx] = de.data[idx] * (1.0 - out.data[idx] * out.data[idx]);
    const Matrix a = detail::window_concat(etrace.acts[ki], cfg.window);
    linear_backward_params(dpre, a, g(model.layout.enc_weight[ki]).data(),
                           g(model.layout.enc_bias[ki]).data());
    Matrix da(U, win * D);
    linear_backward_input(dpre, p.view(model.layout.enc_weight[ki]).data(), da);
    Matrix de_prev(U, D);
    for (std::size_t u = 0; u < U; ++u) {
      for (std::int32_t o = -cfg.window; o <= cfg.window; ++o) {
        const std::int64_t v = static_cast<std::int64_t>(u) + o;
        if (v < 0 || v >= static_cast<std::int64_t>(U)) continue;
        axpy(1.0, da.row(u) + static_cast<std::size_t>(o + cfg.window) * D,
             de_prev.row(static_cast<std::size_t>(v)), D);
      }
    }
    de = std::move(de_prev);
  }

  std::span<double> gemb = g(model.layout.embedding);
  for (std::size_t u = 0; u < U; ++u)
    axpy(1.0, de.row(u), gemb.data() + static_cast<std::size_t>(x[u]) * D, D);

  return stats;
}

struct BackwardResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean-cell loss and its gradient for one example.
inline BackwardResult backward(const TokenSequence& x, const PaddedTargetMatrix& targets,
                               const ModelParams& model, LossMask mask = LossMask::full) {
  BackwardResult r;
  r.grad.assign(model.params.size(), 0.0);
  const LossStats s = backward_accumulate(x, targets, model, mask, r.grad);
  r.loss = s.loss_sum / static_cast<double>(s.cells);
  for (double& v : r.grad) v /= static_cast<double>(s.cells);
  return r;
}

}  // namespace seginr
