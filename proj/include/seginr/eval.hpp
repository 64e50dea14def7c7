#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "seginr/core.hpp"
#include "seginr/decode.hpp"
#include "seginr/io.hpp"
#include "seginr/net.hpp"
#include "seginr/parallel.hpp"

namespace seginr {

inline std::int64_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b) {
  const std::size_t n = b.size();
  std::vector<std::int64_t> prev(n + 1), cur(n + 1);
  std::iota(prev.begin(), prev.end(), std::int64_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<std::int64_t>(i);
    for (std::size_t j = 1; j <= n; ++j) {
      const std::int64_t sub = prev[j - 1] + (a[i - 1] != b[j - 1] ? 1 : 0);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

// Edit distance normalized by the reference length (floored at 1).
inline double token_error_rate(std::span<const TokenId> hyp, std::span<const TokenId> ref) {
  return static_cast<double>(levenshtein(hyp, ref)) /
         static_cast<double>(std::max<std::size_t>(ref.size(), 1));
}

// Fraction of positions whose durations match exactly.
inline double duration_accuracy(std::span<const std::int32_t> hyp,
                                std::span<const std::int32_t> ref) {
  if (hyp.size() != ref.size())
    throw LengthMismatch("duration_accuracy: " + std::to_string(hyp.size()) + " vs " +
                         std::to_string(ref.size()) + " positions");
  if (ref.empty()) return 1.0;
  std::size_t match = 0;
  for (std::size_t u = 0; u < ref.size(); ++u)
    if (hyp[u] == ref[u]) ++match;
  return static_cast<double>(match) / static_cast<double>(ref.size());
}

struct CellMetrics {
  bool padded_training = false;
  StopRule rule = StopRule::threshold;
  double seq_error = 0.0;    // pooled edit distance / pooled reference length
  double dur_acc = 0.0;      // pooled exact duration matches / positions
  double wasted_mean = 0.0;  // mean wasted cells per example
};

// Decode a held-out set and pool integer tallies. Integer sums make the
// result independent of evaluation order, so the sweep can run on the
// thread budget.
inline CellMetrics eval_cell(std::span<const Example> examples, const ModelParams& model,
                             const DecodeConfig& cfg, bool padded_flag) {
  if (examples.empty()) throw Error("eval_cell: empty dataset");
  struct Tally {
    std::int64_t lev = 0, ref_len = 0, dur_match = 0, positions = 0, wasted = 0;
  };
  std::vector<Tally> tallies(examples.size());
  parallel_for(examples.size(), [&](std::size_t idx) {
    const Example& ex = examples[idx];
    const DecodeResult res = parallel_decode(ex.tokens, model, cfg);
    const std::vector<TokenId> ref = concat_segments(ex.target);
    const std::vector<std::int32_t> ref_d = ex.target.durations();
    Tally& t = tallies[idx];
    t.lev = levenshtein(res.output, ref);
    t.ref_len = static_cast<std::int64_t>(std::max<std::size_t>(ref.size(), 1));
    for (std::size_t u = 0; u < ref_d.size(); ++u)
      if (res.durations[u] == ref_d[u]) ++t.dur_match;
    t.positions = static_cast<std::int64_t>(ref_d.size());
    t.wasted = res.wasted;
  });
  Tally total;
  for (const Tally& t : tallies) {
    total.lev += t.lev;
    total.ref_len += t.ref_len;
    total.dur_match += t.dur_match;
    total.positions += t.positions;
    total.wasted += t.wasted;
  }
  CellMetrics m;
  m.padded_training = padded_flag;
  m.rule = cfg.rule;
  m.seq_error = static_cast<double>(total.lev) / static_cast<double>(total.ref_len);
  m.dur_acc = static_cast<double>(total.dur_match) / static_cast<double>(total.positions);
  m.wasted_mean = static_cast<double>(total.wasted) / static_cast<double>(examples.size());
  return m;
}

// 2×2 grid: {padded, unpadded training} × {threshold, argmax stop rule}, all
// cells decoded in parallel mode on the same held-out set.
struct AblationReport {
  std::array<CellMetrics, 4> cells;

  const CellMetrics& cell(bool padded, StopRule rule) const {
    for (const CellMetrics& c : cells)
      if (c.padded_training == padded && c.rule == rule) return c;
    throw Error("ablation cell not found");
  }
};

inline AblationReport run_ablation(std::span<const Example> heldout,
                                   const ModelParams& padded_model,
                                   const ModelParams& unpadded_model, std::int32_t i_max,
                                   double tau) {
  AblationReport report;
  std::size_t idx = 0;
  for (const bool padded : {true, false}) {
    const ModelParams& model = padded ? padded_model : unpadded_model;
    for (const StopRule rule : {StopRule::threshold, StopRule::argmax}) {
      const DecodeConfig cfg{DecodeMode::parallel, rule, tau, i_max};
      report.cells[idx++] = eval_cell(heldout, model, cfg, padded);
    }
  }
  return report;
}

inline const char* stop_rule_name(StopRule rule) {
  return rule == StopRule::threshold ? "threshold" : "argmax";
}

inline std::string ablation_csv(const AblationReport& report) {
  std::string out = "padded,stop_rule,seq_error,dur_acc,wasted_mean\n";
  for (const CellMetrics& c : report.cells) {
    out += c.padded_training ? "true" : "false";
    out += ',';
    out += stop_rule_name(c.rule);
    out += ',';
    out += format_g17(c.seq_error);
    out += ',';
    out += format_g17(c.dur_acc);
    out += ',';
    out += format_g17(c.wasted_mean);
    out += '\n';
  }
  return out;
}

inline AblationReport parse_ablation_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "padded,stop_rule,seq_error,dur_acc,wasted_mean")
    throw ParseError("bad ablation CSV header", 1, 1);
  AblationReport report;
  for (std::size_t row = 0; row < 4; ++row) {
    if (!std::getline(in, line)) throw ParseError("expected 4 data rows", row + 2, 1);
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      fields.push_back(line.substr(pos, end - pos));
      pos = end + 1;
    }
    if (fields.size() != 5) throw ParseError("expected 5 fields", row + 2, 1);
    CellMetrics& c = report.cells[row];
    if (fields[0] == "true")
      c.padded_training = true;
    else if (fields[0] == "false")
      c.padded_training = false;
    else
      throw ParseError("bad padded flag '" + fields[0] + "'", row + 2, 1);
    if (fields[1] == "threshold")
      c.rule = StopRule::threshold;
    else if (fields[1] == "argmax")
      c.rule = StopRule::argmax;
    else
      throw ParseError("bad stop rule '" + fields[1] + "'", row + 2, 1);
    c.seq_error = std::stod(fields[2]);
    c.dur_acc = std::stod(fields[3]);
    c.wasted_mean = std::stod(fields[4]);
  }
  return report;
}

inline AblationReport parse_ablation_csv(const std::string& text) {
  std::istringstream in(text);
  return parse_ablation_csv(in);
}

// Fraction of reference segments whose ∅ probability stays at or above tau
// at every index from the true duration up to i_pad.
inline double null_stability_rate(std::span<const Example> examples, const ModelParams& model,
                                  std::int32_t i_pad, double tau) {
  if (examples.empty()) throw Error("null_stability_rate: empty dataset");
  struct Tally {
    std::int64_t stable = 0, total = 0;
  };
  std::vector<Tally> tallies(examples.size());
  const auto null_idx = static_cast<std::size_t>(model.cfg.vocab.null_id());
  parallel_for(examples.size(), [&](std::size_t idx) {
    const Example& ex = examples[idx];
    const Matrix e = encode(ex.tokens, model);
    const std::size_t U = ex.tokens.size();
    const auto n = static_cast<std::size_t>(i_pad);
    const Matrix logits = forward_batch(time_index_grid(U, i_pad), e, model);
    std::vector<double> p(static_cast<std::size_t>(model.cfg.joint_size()));
    Tally& t = tallies[idx];
    for (std::size_t u = 0; u < U; ++u) {
      const auto d = static_cast<std::size_t>(ex.target.segments[u].duration());
      bool stable = true;
      for (std::size_t i = d; i < n; ++i) {
        softmax_into(logits.row_span(u * n + i), p);
        if (p[null_idx] < tau) {
          stable = false;
          break;
        }
      }
      t.total += 1;
      if (stable) t.stable += 1;
    }
  });
  std::int64_t stable = 0, total = 0;
  for (const Tally& t : tallies) {
    stable += t.stable;
    total += t.total;
  }
  return static_cast<double>(stable) / static_cast<double>(total);
}

}  // namespace seginr
