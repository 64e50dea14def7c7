#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seginr/common.hpp"
#include "seginr/param_vector.hpp"
#include "seginr/rng.hpp"

namespace seginr {

// Max-subtracted softmax; no validation, for hot paths.
inline void softmax_into(std::span<const double> logits, std::span<double> out) {
  double max = logits[0];
  for (double v : logits) max = std::max(max, v);
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - max);
    sum += out[k];
  }
  const double inv = 1.0 / sum;
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] *= inv;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error("softmax of empty vector");
  for (double v : logits)
    if (!std::isfinite(v)) throw NonFinite("softmax input is not finite");
  std::vector<double> out(logits.size());
  softmax_into(logits, out);
  return out;
}

// Writes softmax(logits) − one_hot(target) into grad and returns the
// cross-entropy loss. The caller guarantees target is in range.
inline double cross_entropy_into(std::span<const double> logits, TokenId target,
                                 std::span<double> grad) {
  double max = logits[0];
  for (double v : logits) max = std::max(max, v);
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    grad[k] = std::exp(logits[k] - max);
    sum += grad[k];
  }
  const double inv = 1.0 / sum;
  for (std::size_t k = 0; k < logits.size(); ++k) grad[k] *= inv;
  grad[static_cast<std::size_t>(target)] -= 1.0;
  return std::log(sum) - (logits[static_cast<std::size_t>(target)] - max);
}

struct CrossEntropyResult {
  double loss = 0.0;
  std::vector<double> grad;
};

inline CrossEntropyResult cross_entropy(std::span<const double> logits, TokenId target) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size())
    throw BadClass("target class " + std::to_string(target) + " outside [0, " +
                   std::to_string(logits.size()) + ")");
  CrossEntropyResult r;
  r.grad.resize(logits.size());
  r.loss = cross_entropy_into(logits, target, r.grad);
  return r;
}

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t n, double lr_ = 1e-3) : lr(lr_), m(n, 0.0), v(n, 0.0) {}
};

// Standard Adam update with bias correction. A zero gradient leaves the
// parameters bit-identical.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s) {
  if (params.size() != grads.size() || params.size() != s.m.size())
    throw LengthMismatch("adam_step: size mismatch");
  s.t += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    s.m[k] = s.beta1 * s.m[k] + (1.0 - s.beta1) * g;
    s.v[k] = s.beta2 * s.v[k] + (1.0 - s.beta2) * g * g;
    const double mhat = s.m[k] / bc1;
    const double vhat = s.v[k] / bc2;
    params[k] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

// Central-difference check of an analytic gradient over randomly sampled
// coordinates. The relative-error denominator is floored at 1e-8 so dead
// coordinates do not divide by zero.
inline double grad_check(const std::function<double(const ParamVector&)>& loss_fn,
                         const ParamVector& params, std::span<const double> analytic_grad,
                         double h, std::size_t samples, Rng& rng) {
  ParamVector probe = params;
  std::span<double> vals = probe.values();
  const std::size_t n = vals.size();
  double max_rel = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t k =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    const double orig = vals[k];
    vals[k] = orig + h;
    const double fp = loss_fn(probe);
    vals[k] = orig - h;
    const double fm = loss_fn(probe);
    vals[k] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double analytic = analytic_grad[k];
    const double den = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / den);
  }
  return max_rel;
}

}  // namespace seginr
