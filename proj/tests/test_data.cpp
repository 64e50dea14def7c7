#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <vector>

#include "seginr/data.hpp"

using namespace seginr;

namespace {

TaskSpec local_spec() {
  TaskSpec s;
  s.rule = DurationRule::local;
  return s;
}

TaskSpec contextual_spec() {
  TaskSpec s;
  s.rule = DurationRule::contextual;
  return s;
}

std::string serialize_to_string(const std::vector<Example>& examples) {
  std::ostringstream out;
  serialize_dataset(examples, out);
  return out.str();
}

}  // namespace

TEST_CASE("local rule formulas") {
  const TaskSpec spec = local_spec();
  const SegmentedTarget t = oracle_segments(spec, {3});
  REQUIRE(t.size() == 1);
  CHECK(t.segments[0].frames == std::vector<TokenId>{24, 25, 26, 27});

  CHECK(oracle_segments(spec, {0}).segments[0].frames == std::vector<TokenId>{0});

  const SegmentedTarget seven = oracle_segments(spec, {7});
  CHECK(seven.segments[0].duration() == 8);
  CHECK(seven.segments[0].frames ==
        std::vector<TokenId>{24, 25, 26, 27, 28, 29, 30, 31});
}

TEST_CASE("contextual rule formulas") {
  const TaskSpec spec = contextual_spec();
  const SegmentedTarget t = oracle_segments(spec, {3, 5});
  REQUIRE(t.size() == 2);
  CHECK(t.segments[0].duration() == 1);  // 1 + (3+5) mod 8
  CHECK(t.segments[1].duration() == 6);  // 1 + (5+0) mod 8
  CHECK(t.segments[0].frames == std::vector<TokenId>{24});
  CHECK(t.segments[1].frames == std::vector<TokenId>{8, 9, 10, 11, 12, 13});
}

TEST_CASE("contextual durations genuinely depend on the right neighbor") {
  const TaskSpec spec = contextual_spec();
  bool any_change = false;
  for (TokenId a = 0; a < spec.vocab.input_size; ++a) {
    for (TokenId b1 = 0; b1 < spec.vocab.input_size; ++b1) {
      for (TokenId b2 = 0; b2 < spec.vocab.input_size; ++b2) {
        const std::int32_t d1 = oracle_duration(spec, {a, b1}, 0);
        const std::int32_t d2 = oracle_duration(spec, {a, b2}, 0);
        if (d1 != d2) any_change = true;
      }
    }
  }
  CHECK(any_change);
  // and the local rule never does
  const TaskSpec loc = local_spec();
  for (TokenId a = 0; a < loc.vocab.input_size; ++a)
    for (TokenId b = 0; b < loc.vocab.input_size; ++b)
      CHECK(oracle_duration(loc, {a, b}, 0) == oracle_duration(loc, {a, TokenId(0)}, 0));
}

TEST_CASE("generator properties") {
  for (const TaskSpec spec : {local_spec(), contextual_spec()}) {
    Rng rng(spec.rule == DurationRule::local ? 1u : 2u);
    for (int trial = 0; trial < 200; ++trial) {
      const Example ex = gen_example(spec, rng);
      CHECK(ex.tokens.size() >= static_cast<std::size_t>(spec.u_min));
      CHECK(ex.tokens.size() <= static_cast<std::size_t>(spec.u_max));
      REQUIRE(ex.target.size() == ex.tokens.size());
      std::int64_t total = 0;
      for (std::size_t u = 0; u < ex.tokens.size(); ++u) {
        const std::int32_t d = ex.target.segments[u].duration();
        CHECK(d >= 1);
        CHECK(d <= 8);
        CHECK(d < 20);  // always under the default padding horizon
        total += d;
        for (TokenId f : ex.target.segments[u].frames) {
          CHECK(f >= 0);
          CHECK(f < spec.vocab.output_size);
        }
      }
      CHECK(total == static_cast<std::int64_t>(concat_segments(ex.target).size()));
      // oracle agrees with the generated target
      const SegmentedTarget redo = oracle_segments(spec, ex.tokens);
      for (std::size_t u = 0; u < ex.tokens.size(); ++u)
        CHECK(redo.segments[u].frames == ex.target.segments[u].frames);
    }
  }
}

TEST_CASE("generation is deterministic given the seed") {
  TaskSpec spec = contextual_spec();
  spec.seed = 31;
  const std::vector<Example> a = gen_dataset(spec, 50);
  const std::vector<Example> b = gen_dataset(spec, 50);
  CHECK(serialize_to_string(a) == serialize_to_string(b));
  spec.seed = 32;
  CHECK(serialize_to_string(gen_dataset(spec, 50)) != serialize_to_string(a));
}

TEST_CASE("oracle_segments validates tokens") {
  CHECK_THROWS_AS(oracle_segments(local_spec(), {16}), BadToken);
  CHECK_THROWS_AS(oracle_segments(local_spec(), {-2}), BadToken);
}

TEST_CASE("serialization format") {
  Example ex;
  ex.tokens = {3, 5};
  ex.target = oracle_segments(contextual_spec(), ex.tokens);
  CHECK(serialize_to_string({ex}) == "3 5\t24|8,9,10,11,12,13\n");

  CHECK(serialize_to_string({}).empty());
}

TEST_CASE("parse inverts serialize") {
  TaskSpec spec = contextual_spec();
  spec.seed = 8;
  const std::vector<Example> examples = gen_dataset(spec, 1000);
  const std::string text = serialize_to_string(examples);
  std::istringstream in(text);
  const std::vector<Example> parsed = parse_dataset(in);
  CHECK(serialize_to_string(parsed) == text);
  REQUIRE(parsed.size() == examples.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].tokens == examples[i].tokens);
    REQUIRE(parsed[i].target.size() == examples[i].target.size());
    for (std::size_t u = 0; u < parsed[i].target.size(); ++u)
      CHECK(parsed[i].target.segments[u].frames == examples[i].target.segments[u].frames);
  }
}

TEST_CASE("empty input parses to an empty dataset") {
  std::istringstream in("");
  CHECK(parse_dataset(in).empty());
}

TEST_CASE("zero-duration segments round trip") {
  Example ex;
  ex.tokens = {1, 2, 3};
  ex.target.segments = {Segment{{7}}, Segment{{}}, Segment{{9, 9}}};
  const std::string text = serialize_to_string({ex});
  CHECK(text == "1 2 3\t7||9,9\n");
  std::istringstream in(text);
  const std::vector<Example> parsed = parse_dataset(in);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].target.segments[1].frames.empty());
  CHECK(parsed[0].target.segments[2].frames == std::vector<TokenId>{9, 9});
}

TEST_CASE("parse errors carry line and column") {
  auto expect_error = [](const std::string& text, std::size_t line, std::size_t column) {
    std::istringstream in(text);
    try {
      parse_dataset(in);
      FAIL_CHECK("expected ParseError for: " << text);
    } catch (const ParseError& e) {
      CHECK(e.line == line);
      CHECK(e.column == column);
    }
  };
  expect_error("3 5 24", 1, 7);            // missing TAB
  expect_error("3 x\t1", 1, 3);            // non-numeric token
  expect_error("3 5\t1|2\n1\tzz", 2, 3);   // non-numeric frame on line 2
  expect_error("3 -5\t1|2", 1, 3);         // negative id
  expect_error("\t1", 1, 1);               // empty input sequence
  expect_error("3 5\t1", 1, 5);            // one segment for two tokens
  expect_error("3\t1\t2", 1, 4);           // two TABs
  expect_error("3 5\t1,,2|4", 1, 7);       // empty frame field
  expect_error("3  5\t1|2", 1, 3);         // double space = empty token field
  expect_error("99999999999\t1", 1, 1);    // overflow
}

TEST_CASE("dataset file round trip") {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "seginr_data_test.tsv";
  TaskSpec spec = contextual_spec();
  spec.seed = 77;
  const std::vector<Example> examples = gen_dataset(spec, 20);
  serialize_dataset(examples, p.string());
  const std::vector<Example> parsed = parse_dataset_file(p.string());
  CHECK(serialize_to_string(parsed) == serialize_to_string(examples));
  fs::remove(p);
  CHECK_THROWS_AS(parse_dataset_file(p.string()), IoError);
}
