#include "scribe/strokes.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

using namespace scribe;
namespace st = scribe::testing;

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "scribe_test_strokes";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

InkFile parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse_ink(in);
}

TEST(Alphabet, DefaultHas42SymbolsAndBlankAfterThem) {
  auto a = Alphabet::make_default();
  EXPECT_EQ(a.size(), 42u);
  EXPECT_EQ(a.blank(), 42);
  EXPECT_FALSE(a.find("blank").has_value());
  EXPECT_EQ(a.encode("c05"), 5);
  EXPECT_EQ(a.symbol(41), "c41");
}

TEST(Alphabet, RejectsDuplicatesAndOutOfRangeLabels) {
  EXPECT_THROW(Alphabet({"a", "b", "a"}), ConfigError);
  Alphabet a({"a", "b"});
  EXPECT_THROW(a.symbol(2), DataError);
  EXPECT_THROW(a.symbol(-1), DataError);
  EXPECT_THROW(a.encode("z"), DataError);
}

TEST(InkFormat, SingleRecordWithThreePoints) {
  const std::string text =
      "{\"format\":\"scribe-ink/1\",\"alphabet\":[\"a\",\"b\"]}\n"
      "{\"id\":\"s1\",\"transcription\":[\"a\",\"b\"],\"strokes\":[[[0,0],[1,0.5]],[[2,1]]]}\n";
  auto f = parse_string(text);
  ASSERT_EQ(f.samples.size(), 1u);
  const auto& s = f.samples[0];
  EXPECT_EQ(s.sample_id, "s1");
  ASSERT_EQ(s.points.size(), 3u);
  EXPECT_EQ(s.transcription, (LabelSequence{0, 1}));
  EXPECT_EQ(s.points[1], (RawPoint{1.0, 0.5, 0}));
  EXPECT_EQ(s.points[2].stroke_index, 1);
}

TEST(InkFormat, UnknownSymbolIsNamed) {
  const std::string text =
      "{\"format\":\"scribe-ink/1\",\"alphabet\":[\"a\",\"b\"]}\n"
      "{\"id\":\"s1\",\"transcription\":[\"a\",\"q\"],\"strokes\":[[[0,0]]]}\n";
  try {
    parse_string(text);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'q'"), std::string::npos) << e.what();
  }
}

TEST(InkFormat, MalformedLineReportsLineNumber) {
  const std::string text =
      "{\"format\":\"scribe-ink/1\",\"alphabet\":[\"a\"]}\n"
      "{\"id\":\"s1\",\"strokes\":[[[0,0]]]}\n"
      "{\"id\":\"s2\",\"strokes\":[[[0,0]\n";
  try {
    parse_string(text);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(InkFormat, MissingHeaderAndBadPointsFail) {
  EXPECT_THROW(parse_string("{\"id\":\"s\",\"strokes\":[]}\n"), DataError);
  EXPECT_THROW(parse_string("{\"format\":\"scribe-ink/1\",\"alphabet\":[]}\n{\"id\":\"s\",\"strokes\":[[[0]]]}\n"),
               DataError);
  EXPECT_THROW(parse_string("{\"format\":\"scribe-ink/1\",\"alphabet\":[]}\n{\"id\":\"s\",\"strokes\":[[]]}\n"),
               DataError);
}

TEST(InkFormat, EmptyFileGivesEmptyList) {
  auto p = temp_path("empty.jsonl");
  std::ofstream(p).close();
  auto f = parse_ink_file(p);
  EXPECT_TRUE(f.samples.empty());
}

TEST(InkFormat, EmptyListWritesHeaderOnly) {
  auto a = Alphabet::make_default(3);
  auto text = format_ink({}, a);
  EXPECT_EQ(text, "{\"format\":\"scribe-ink/1\",\"alphabet\":[\"c00\",\"c01\",\"c02\"]}\n");
  EXPECT_TRUE(parse_string(text).samples.empty());
}

TEST(InkFormat, WriteParseRoundTripIsExactAndBitStable) {
  auto a = Alphabet::make_default();
  st::Rng rng(7);
  std::vector<InkSample> samples;
  for (int i = 0; i < 20; ++i) {
    InkSample s;
    s.sample_id = "id" + std::to_string(i);
    s.points = st::random_polyline(rng, 30, 3, 1.0 / 3.0);
    if (i % 3) s.transcription = st::random_labels(rng, 4, 42);
    samples.push_back(s);
  }
  samples.push_back(InkSample{{}, LabelSequence{}, "blank-one"});

  auto p1 = temp_path("a.jsonl"), p2 = temp_path("b.jsonl");
  write_ink_file(samples, a, p1);
  write_ink_file(samples, a, p2);
  EXPECT_EQ(slurp(p1), slurp(p2));

  auto back = parse_ink_file(p1);
  EXPECT_EQ(back.alphabet, a);
  ASSERT_EQ(back.samples.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) EXPECT_EQ(back.samples[i], samples[i]) << i;

  auto p3 = temp_path("c.jsonl");
  write_ink_file(back.samples, back.alphabet, p3);
  EXPECT_EQ(slurp(p1), slurp(p3));
}

TEST(InkSample, ValidateChecksStrokeContiguityAndTranscription) {
  Alphabet a({"a"});
  InkSample s{{{0, 0, 0}, {1, 1, 2}}, std::nullopt, "gap"};
  EXPECT_THROW(validate(s, a), DataError);
  s.points = {{0, 0, 1}};
  EXPECT_THROW(validate(s, a), DataError);
  s.points = {};
  s.transcription = LabelSequence{0};
  EXPECT_THROW(validate(s, a), DataError);
  s.points = {{0, 0, 0}, {std::nan(""), 0, 0}};
  EXPECT_THROW(validate(s, a), DataError);
}

TEST(SynthWord, SameInputsGiveIdenticalInk) {
  auto a = Alphabet::make_default();
  SynthStyle style{0.2, 1.1, 0.01, 20, 99};
  auto x = synth_word({3, 17, 40}, style, a);
  auto y = synth_word({3, 17, 40}, style, a);
  EXPECT_EQ(x, y);
  EXPECT_EQ(format_ink({x}, a), format_ink({y}, a));
  style.rng_seed = 100;
  EXPECT_NE(synth_word({3, 17, 40}, style, a), x);
}

TEST(SynthWord, NoiseFreeUprightInkIsTheTemplateComposition) {
  auto a = Alphabet::make_default();
  SynthStyle style;
  style.points_per_glyph = 20;
  for (Label l : {0, 6, 13, 41}) {
    auto s = synth_word({l}, style, a);
    auto ref = resample_path(glyph_template(l).path, 20);
    ASSERT_EQ(s.points.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_EQ(s.points[i].x, ref[i].x);
      EXPECT_EQ(s.points[i].y, ref[i].y);
    }
  }
  // second glyph sits one width plus the join to the left of the first
  auto s = synth_word({0, 1}, style, a);
  const auto g0 = glyph_template(0);
  const double offset = -g0.width() - synth::kConnectorGap;
  auto ref = resample_path(glyph_template(1).path, 20);
  const std::size_t start = 20 + synth::kConnectorPoints;
  ASSERT_EQ(s.points.size(), start + 20);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(s.points[start + i].x, offset + ref[i].x);
    EXPECT_EQ(s.points[start + i].y, ref[i].y);
  }
}

TEST(SynthWord, ThreeGlyphPointCountWithinConnectorBudget) {
  auto a = Alphabet::make_default();
  SynthStyle style;
  style.points_per_glyph = 20;
  const std::size_t budget = 2 * synth::kConnectorPoints;
  st::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = synth_word(st::random_labels(rng, 3, 42), style, a);
    EXPECT_GE(s.points.size(), 60u);
    EXPECT_LE(s.points.size(), 60u + budget);
  }
}

TEST(SynthWord, SlantIsExactlyAShearOfTheUprightInk) {
  auto a = Alphabet::make_default();
  SynthStyle upright{0.0, 1.0, 0.0, 20, 1};
  for (double alpha : {-0.4, 0.1, 0.3}) {
    SynthStyle slanted = upright;
    slanted.slant_angle = alpha;
    auto u = synth_word({5, 22, 9, 30}, upright, a);
    auto s = synth_word({5, 22, 9, 30}, slanted, a);
    ASSERT_EQ(u.points.size(), s.points.size());
    for (std::size_t i = 0; i < u.points.size(); ++i) {
      EXPECT_NEAR(s.points[i].x, u.points[i].x + u.points[i].y * std::tan(alpha), 1e-12);
      EXPECT_EQ(s.points[i].y, u.points[i].y);
      EXPECT_EQ(s.points[i].stroke_index, u.points[i].stroke_index);
    }
  }
}

TEST(SynthWord, RejectsEmptyWordsAndBadLabels) {
  auto a = Alphabet::make_default(5);
  EXPECT_THROW(synth_word({}, SynthStyle{}, a), DataError);
  EXPECT_THROW(synth_word({0, 5}, SynthStyle{}, a), DataError);
  SynthStyle bad;
  bad.scale = 0.0;
  EXPECT_THROW(synth_word({0}, bad, a), ConfigError);
  bad = SynthStyle{};
  bad.jitter_std = -1.0;
  EXPECT_THROW(synth_word({0}, bad, a), ConfigError);
}

TEST(SynthWord, StrokeIndicesAreContiguous) {
  auto a = Alphabet::make_default();
  SynthStyle style{0.1, 1.0, 0.01, 12, 5};
  for (Label l = 0; l < 42; ++l) {
    auto s = synth_word({l, (l + 6) % 42, 13}, style, a);
    EXPECT_NO_THROW(validate(s, a));
  }
}

}  // namespace
