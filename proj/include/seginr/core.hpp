#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seginr/common.hpp"

namespace seginr {

// Input vocabulary size and joint output space. The end-of-segment class ∅
// is the extra class sitting at index output_size, giving output_size + 1
// joint classes.
struct VocabSpec {
  TokenId input_size = 16;
  TokenId output_size = 32;

  TokenId joint_size() const { return output_size + 1; }
  TokenId null_id() const { return output_size; }

  void validate() const {
    if (input_size < 1 || output_size < 1) throw Error("vocab sizes must be >= 1");
  }
};

using TokenSequence = std::vector<TokenId>;

// One run of output frames aligned to a single input token. Frames never
// contain the ∅ class.
struct Segment {
  std::vector<TokenId> frames;

  std::int32_t duration() const { return static_cast<std::int32_t>(frames.size()); }
};

struct SegmentedTarget {
  std::vector<Segment> segments;

  std::size_t size() const { return segments.size(); }

  std::vector<std::int32_t> durations() const {
    std::vector<std::int32_t> d;
    d.reserve(segments.size());
    for (const Segment& s : segments) d.push_back(s.duration());
    return d;
  }

  std::int64_t total_length() const {
    std::int64_t t = 0;
    for (const Segment& s : segments) t += s.duration();
    return t;
  }
};

// One supervised (input sequence, segmented output) pair.
struct Example {
  TokenSequence tokens;
  SegmentedTarget target;
};

// Flatten segments in order: y_{1:T} with T = sum of durations.
inline std::vector<TokenId> concat_segments(const SegmentedTarget& target) {
  std::vector<TokenId> flat;
  flat.reserve(static_cast<std::size_t>(target.total_length()));
  for (const Segment& s : target.segments)
    flat.insert(flat.end(), s.frames.begin(), s.frames.end());
  return flat;
}

// Inverse of concat_segments given the duration vector.
inline SegmentedTarget split_by_durations(std::span<const TokenId> flat,
                                          std::span<const std::int32_t> durations) {
  std::int64_t total = 0;
  for (std::int32_t d : durations) total += d;
  if (total != static_cast<std::int64_t>(flat.size()))
    throw LengthMismatch("durations sum to " + std::to_string(total) + " but sequence has " +
                         std::to_string(flat.size()) + " frames");
  SegmentedTarget target;
  target.segments.reserve(durations.size());
  std::size_t pos = 0;
  for (std::int32_t d : durations) {
    Segment s;
    s.frames.assign(flat.begin() + pos, flat.begin() + pos + d);
    pos += static_cast<std::size_t>(d);
    target.segments.push_back(std::move(s));
  }
  return target;
}

// U × i_pad matrix over the joint space: row u carries the segment frames in
// columns [0, d_u) and ∅ everywhere from column d_u on.
struct PaddedTargetMatrix {
  std::size_t rows = 0;
  std::int32_t i_pad = 0;
  std::vector<TokenId> data;

  TokenId at(std::size_t u, std::int32_t i) const {
    return data[u * static_cast<std::size_t>(i_pad) + static_cast<std::size_t>(i)];
  }
  std::span<const TokenId> row(std::size_t u) const {
    return {data.data() + u * static_cast<std::size_t>(i_pad), static_cast<std::size_t>(i_pad)};
  }
};

inline PaddedTargetMatrix build_padded_targets(const SegmentedTarget& target, std::int32_t i_pad,
                                               const VocabSpec& vocab) {
  PaddedTargetMatrix m;
  m.rows = target.size();
  m.i_pad = i_pad;
  m.data.assign(m.rows * static_cast<std::size_t>(i_pad), vocab.null_id());
  for (std::size_t u = 0; u < target.size(); ++u) {
    const Segment& s = target.segments[u];
    if (s.duration() >= i_pad)
      throw PadTooSmall("segment " + std::to_string(u) + " has duration " +
                        std::to_string(s.duration()) + " >= i_pad " + std::to_string(i_pad));
    std::copy(s.frames.begin(), s.frames.end(),
              m.data.begin() + static_cast<std::ptrdiff_t>(u * static_cast<std::size_t>(i_pad)));
  }
  return m;
}

// Index of the first ∅ in the row, or the row length when ∅ never appears.
inline std::int32_t duration_from_row(std::span<const TokenId> row, TokenId null_id) {
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i] == null_id) return static_cast<std::int32_t>(i);
  return static_cast<std::int32_t>(row.size());
}

}  // namespace seginr
