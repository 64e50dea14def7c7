#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seginr/common.hpp"
#include "seginr/core.hpp"
#include "seginr/rng.hpp"

namespace seginr {

enum class DurationRule { local, contextual };

// Synthetic monotonic seq2seq task with deterministic ground-truth
// durations. The local rule reads one token; the contextual rule also reads
// the right neighbor, which a context-free encoder cannot predict.
struct TaskSpec {
  VocabSpec vocab;
  DurationRule rule = DurationRule::contextual;
  std::int32_t u_min = 3;
  std::int32_t u_max = 10;
  std::uint64_t seed = 0;
};

// d_u = 1 + (x_u mod 8), or 1 + ((x_u + x_{u+1}) mod 8) with the token past
// the end read as 0. Always in [1, 8].
inline std::int32_t oracle_duration(const TaskSpec& spec, const TokenSequence& x, std::size_t u) {
  const TokenId cur = x[u];
  if (spec.rule == DurationRule::local) return 1 + cur % 8;
  const TokenId next = (u + 1 < x.size()) ? x[u + 1] : 0;
  return 1 + (cur + next) % 8;
}

// Ground-truth segments for any input: frame i of segment u is
// (8·x_u + i) mod |Y|.
inline SegmentedTarget oracle_segments(const TaskSpec& spec, const TokenSequence& x) {
  spec.vocab.validate();
  SegmentedTarget target;
  target.segments.reserve(x.size());
  for (std::size_t u = 0; u < x.size(); ++u) {
    if (x[u] < 0 || x[u] >= spec.vocab.input_size)
      throw BadToken("token id " + std::to_string(x[u]) + " outside [0, " +
                     std::to_string(spec.vocab.input_size) + ")");
    const std::int32_t d = oracle_duration(spec, x, u);
    Segment seg;
    seg.frames.reserve(static_cast<std::size_t>(d));
    for (std::int32_t i = 0; i < d; ++i)
      seg.frames.push_back((8 * x[u] + i) % spec.vocab.output_size);
    target.segments.push_back(std::move(seg));
  }
  return target;
}

inline Example gen_example(const TaskSpec& spec, Rng& rng) {
  const auto U = static_cast<std::size_t>(rng.uniform_int(spec.u_min, spec.u_max));
  TokenSequence x(U);
  for (TokenId& t : x)
    t = static_cast<TokenId>(rng.uniform_int(0, spec.vocab.input_size - 1));
  return Example{x, oracle_segments(spec, x)};
}

inline std::vector<Example> gen_dataset(const TaskSpec& spec, std::size_t count) {
  Rng rng(spec.seed);
  std::vector<Example> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(gen_example(spec, rng));
  return out;
}

// ─── Dataset text format ────────────────────────────────────────────────────
//
// One example per line: input ids space-separated, TAB, segments separated
// by '|', frames within a segment comma-separated, LF line endings, no
// trailing separators.  Example:  3 5<TAB>24|8,9,10,11,12,13

inline void serialize_dataset(std::span<const Example> examples, std::ostream& out) {
  for (const Example& ex : examples) {
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i) out << ' ';
      out << ex.tokens[i];
    }
    out << '\t';
    for (std::size_t s = 0; s < ex.target.segments.size(); ++s) {
      if (s) out << '|';
      const Segment& seg = ex.target.segments[s];
      for (std::size_t i = 0; i < seg.frames.size(); ++i) {
        if (i) out << ',';
        out << seg.frames[i];
      }
    }
    out << '\n';
  }
}

inline void serialize_dataset(std::span<const Example> examples, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  serialize_dataset(examples, f);
  if (!f) throw IoError("write failed: '" + path + "'");
}

namespace detail {

// Parses a nonnegative int32 field; col_base is the 1-based column of the
// field start within the line.
inline TokenId parse_id(std::string_view field, std::size_t line_no, std::size_t col_base) {
  if (field.empty()) throw ParseError("empty id field", line_no, col_base);
  TokenId value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec == std::errc::result_out_of_range)
    throw ParseError("id out of range", line_no, col_base);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError("expected an integer, got '" + std::string(field) + "'", line_no, col_base);
  if (value < 0) throw ParseError("negative id", line_no, col_base);
  return value;
}

}  // namespace detail

inline std::vector<Example> parse_dataset(std::istream& in) {
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("missing TAB separator", line_no, line.size() + 1);
    if (line.find('\t', tab + 1) != std::string::npos)
      throw ParseError("more than one TAB separator", line_no, line.find('\t', tab + 1) + 1);

    Example ex;
    const std::string_view token_part = std::string_view(line).substr(0, tab);
    if (token_part.empty()) throw ParseError("empty input sequence", line_no, 1);
    std::size_t pos = 0;
    while (pos <= token_part.size()) {
      std::size_t end = token_part.find(' ', pos);
      if (end == std::string_view::npos) end = token_part.size();
      ex.tokens.push_back(detail::parse_id(token_part.substr(pos, end - pos), line_no, pos + 1));
      pos = end + 1;
    }

    const std::string_view seg_part = std::string_view(line).substr(tab + 1);
    const std::size_t seg_base = tab + 2;  // 1-based column of the first segment char
    std::size_t seg_pos = 0;
    while (true) {
      std::size_t seg_end = seg_part.find('|', seg_pos);
      if (seg_end == std::string_view::npos) seg_end = seg_part.size();
      const std::string_view seg = seg_part.substr(seg_pos, seg_end - seg_pos);
      Segment segment;
      if (!seg.empty()) {
        std::size_t f_pos = 0;
        while (f_pos <= seg.size()) {
          std::size_t f_end = seg.find(',', f_pos);
          if (f_end == std::string_view::npos) f_end = seg.size();
          segment.frames.push_back(detail::parse_id(seg.substr(f_pos, f_end - f_pos), line_no,
                                                    seg_base + seg_pos + f_pos));
          f_pos = f_end + 1;
        }
      }
      ex.target.segments.push_back(std::move(segment));
      if (seg_end == seg_part.size()) break;
      seg_pos = seg_end + 1;
    }

    if (ex.target.segments.size() != ex.tokens.size())
      throw ParseError("segment count " + std::to_string(ex.target.segments.size()) +
                           " != token count " + std::to_string(ex.tokens.size()),
                       line_no, seg_base);
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<Example> parse_dataset_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  return parse_dataset(f);
}

}  // namespace seginr
