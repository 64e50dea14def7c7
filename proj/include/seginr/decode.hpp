#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "seginr/core.hpp"
#include "seginr/io.hpp"
#include "seginr/net.hpp"
#include "seginr/numerics.hpp"

namespace seginr {

enum class DecodeMode { streaming, parallel };
enum class StopRule { threshold, argmax };

struct DecodeConfig {
  DecodeMode mode = DecodeMode::parallel;
  StopRule rule = StopRule::threshold;
  double tau = 0.5;        // ∅ fires when P(∅) >= tau (threshold rule)
  std::int32_t i_max = 20; // per-token duration cap
};

struct DecodeResult {
  std::vector<TokenId> output;            // concatenated segments, never ∅
  std::vector<std::int32_t> durations;    // one per input token, each <= i_max
  std::vector<std::uint8_t> truncated;    // 1 where ∅ never fired before i_max
  std::int64_t wasted = 0;                // grid cells beyond each segment end
                                          // (parallel mode; 0 when streaming)
};

// Grid cells a parallel decode evaluates past each segment's end.
inline std::int64_t wasted_cells(std::span<const std::int32_t> durations, std::int32_t i_max) {
  std::int64_t w = 0;
  for (std::int32_t d : durations) w += i_max - d;
  return w;
}

// One decoding decision. dist is a probability vector over the joint space
// with ∅ last. Threshold rule: ∅ iff P(∅) >= tau, otherwise the most
// probable output token; argmax rule: most probable class overall. Ties
// break toward the lowest class index.
inline TokenId step_rule(std::span<const double> dist, const DecodeConfig& cfg) {
  if (dist.size() < 2) throw BadDistribution("joint distribution needs at least 2 classes");
  double sum = 0.0;
  for (double v : dist) sum += v;
  if (!(std::abs(sum - 1.0) <= 1e-6))
    throw BadDistribution("probabilities sum to " + format_g17(sum));
  const auto null_id = static_cast<TokenId>(dist.size() - 1);
  const std::size_t limit =
      cfg.rule == StopRule::threshold ? dist.size() - 1 : dist.size();
  if (cfg.rule == StopRule::threshold && dist[static_cast<std::size_t>(null_id)] >= cfg.tau)
    return null_id;
  std::size_t best = 0;
  for (std::size_t k = 1; k < limit; ++k)
    if (dist[k] > dist[best]) best = k;
  return static_cast<TokenId>(best);
}

// Per-token sequential decoding: for each u, walk i = 0, 1, 2, … until the
// rule returns ∅ or the i_max safety cap trips (truncation flag set).
inline DecodeResult streaming_decode(const TokenSequence& x, const ModelParams& model,
                                     const DecodeConfig& cfg) {
  const Matrix e = encode(x, model);
  const std::size_t U = x.size();
  const TokenId null_id = model.cfg.vocab.null_id();
  DecodeResult res;
  res.durations.assign(U, 0);
  res.truncated.assign(U, 0);
  for (std::size_t u = 0; u < U; ++u) {
    std::int32_t d = cfg.i_max;
    bool trunc = true;
    for (std::int32_t i = 0; i < cfg.i_max; ++i) {
      const std::vector<double> logits = siren_forward(i, e.row_span(u), model);
      const std::vector<double> p = softmax(logits);
      const TokenId tok = step_rule(p, cfg);
      if (tok == null_id) {
        d = i;
        trunc = false;
        break;
      }
      res.output.push_back(tok);
    }
    res.durations[u] = d;
    res.truncated[u] = trunc ? 1 : 0;
  }
  return res;
}

// Batch decoding: evaluate the full U × i_max grid in one pass, then
// truncate each row at its first ∅. Produces exactly the streaming result,
// plus the wasted-cell count.
inline DecodeResult parallel_decode(const TokenSequence& x, const ModelParams& model,
                                    const DecodeConfig& cfg) {
  const Matrix e = encode(x, model);
  const std::size_t U = x.size();
  const auto n = static_cast<std::size_t>(cfg.i_max);
  const TokenId null_id = model.cfg.vocab.null_id();
  const Matrix grid = time_index_grid(U, cfg.i_max);
  const Matrix logits = forward_batch(grid, e, model);
  DecodeResult res;
  res.durations.assign(U, 0);
  res.truncated.assign(U, 0);
  std::vector<double> p(static_cast<std::size_t>(model.cfg.joint_size()));
  for (std::size_t u = 0; u < U; ++u) {
    std::int32_t d = cfg.i_max;
    bool trunc = true;
    for (std::size_t i = 0; i < n; ++i) {
      softmax_into(logits.row_span(u * n + i), p);
      const TokenId tok = step_rule(p, cfg);
      if (tok == null_id) {
        d = static_cast<std::int32_t>(i);
        trunc = false;
        break;
      }
      res.output.push_back(tok);
    }
    res.durations[u] = d;
    res.truncated[u] = trunc ? 1 : 0;
  }
  res.wasted = wasted_cells(res.durations, cfg.i_max);
  return res;
}

inline DecodeResult decode(const TokenSequence& x, const ModelParams& model,
                           const DecodeConfig& cfg) {
  return cfg.mode == DecodeMode::streaming ? streaming_decode(x, model, cfg)
                                           : parallel_decode(x, model, cfg);
}

// One probability probe per time index: P(∅), the most probable output
// token, and its probability.
struct ProbeRecord {
  std::int32_t i = 0;
  double p_null = 0.0;
  TokenId argmax_y = 0;
  double p_y = 0.0;
};

inline std::vector<ProbeRecord> probe_segment(std::size_t u, const TokenSequence& x,
                                              const ModelParams& model, std::int32_t i_pad) {
  if (u >= x.size())
    throw Error("probe_segment: position " + std::to_string(u) + " outside sequence of length " +
                std::to_string(x.size()));
  const Matrix e = encode(x, model);
  const auto null_idx = static_cast<std::size_t>(model.cfg.vocab.null_id());
  std::vector<ProbeRecord> records;
  records.reserve(static_cast<std::size_t>(i_pad));
  for (std::int32_t i = 0; i < i_pad; ++i) {
    const std::vector<double> logits = siren_forward(i, e.row_span(u), model);
    const std::vector<double> p = softmax(logits);
    std::size_t best = 0;
    for (std::size_t y = 1; y < null_idx; ++y)
      if (p[y] > p[best]) best = y;
    records.push_back(ProbeRecord{i, p[null_idx], static_cast<TokenId>(best), p[best]});
  }
  return records;
}

inline void write_probe_csv(std::ostream& out, std::size_t u,
                            std::span<const ProbeRecord> records) {
  out << "u,i,p_null,argmax_y,p_y\n";
  for (const ProbeRecord& r : records)
    out << u << ',' << r.i << ',' << format_g17(r.p_null) << ',' << r.argmax_y << ','
        << format_g17(r.p_y) << '\n';
}

}  // namespace seginr
