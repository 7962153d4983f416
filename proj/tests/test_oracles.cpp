// The reference implementations used elsewhere, checked against hand values.

#include "scribe/oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <set>

namespace {

using namespace scribe;
namespace st = scribe::testing;

TEST(Oracle, CollapseMergesRepeatsBeforeDroppingBlanks) {
  EXPECT_EQ(oracles::collapse_path({0, 0, 2, 0, 1, 1}, 2), (LabelSequence{0, 0, 1}));
  EXPECT_EQ(oracles::collapse_path({2, 2}, 2), LabelSequence{});
  EXPECT_EQ(oracles::collapse_path({1, 2, 1}, 2), (LabelSequence{1, 1}));
  EXPECT_EQ(oracles::collapse_path({}, 2), LabelSequence{});
}

TEST(Oracle, PathEnumerationCoversEveryPathOnce) {
  st::Rng rng(1);
  auto lp = st::random_log_probs(rng, 4, 2);
  std::size_t visits = 0;
  double mass = 0.0;
  std::set<std::vector<int>> seen;
  oracles::for_each_path(lp, [&](const std::vector<int>& path, double p) {
    ++visits;
    mass += std::exp(p);
    seen.insert(path);
  });
  EXPECT_EQ(visits, 81u);
  EXPECT_EQ(seen.size(), 81u);
  EXPECT_NEAR(mass, 1.0, 1e-12);
  EXPECT_THROW(oracles::for_each_path(Matrix::Zero(30, 3), [](const std::vector<int>&, double) {}), ConfigError);
}

TEST(Oracle, LikelihoodOfTheTwoFrameCase) {
  // two frames, one label plus blank, each at 0.5: paths "a a", "a -", "- a"
  Matrix lp = Matrix::Constant(2, 2, std::log(0.5));
  EXPECT_NEAR(oracles::brute_ctc_likelihood(lp, {0}), 0.75, 1e-15);
  EXPECT_NEAR(oracles::brute_ctc_likelihood(lp, {}), 0.25, 1e-15);
  EXPECT_EQ(oracles::brute_ctc_likelihood(lp, {0, 0}), 0.0);
  auto dist = oracles::brute_labelling_distribution(lp);
  EXPECT_EQ(dist.size(), 2u);
}

TEST(Oracle, DictionaryDecodeIsSortedAndAddsTheStartProbability) {
  Matrix lp = Matrix::Constant(2, 3, std::log(1.0 / 3));
  Dictionary dict({{0}, {1}, {0, 1}, {1, 1, 0}});
  BigramModel lm = BigramModel::uniform(4);
  lm.start_log_prob << std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4);
  auto r = oracles::brute_dictionary_decode(lp, dict, &lm, 2.0);
  ASSERT_EQ(r.entries.size(), 4u);
  // p("a") = p("b") = 3/9, p("a b") = 1/9, "b b a" unreachable
  EXPECT_EQ(r.entries[0].words, WordSequence{1});
  EXPECT_NEAR(r.entries[0].log_score, std::log(3.0 / 9) + 2.0 * std::log(0.2), 1e-12);
  EXPECT_EQ(r.entries[3].words, WordSequence{3});
  EXPECT_EQ(r.entries[3].log_score, kLogZero);
}

TEST(Oracle, SequenceDecodeUsesTheBestPathAndBigramChain) {
  // frames: a, blank, b with certainty 0.8
  Matrix lp(3, 3);
  lp << std::log(0.8), std::log(0.1), std::log(0.1),
        std::log(0.1), std::log(0.1), std::log(0.8),
        std::log(0.1), std::log(0.8), std::log(0.1);
  Dictionary dict({{0}, {1}, {0, 1}});
  BigramModel lm = BigramModel::uniform(3);
  auto two_words = oracles::brute_sequence_decode(lp, dict, lm, 1.0);
  // "a b" as one word beats "a" + "b" by one uniform transition
  EXPECT_EQ(two_words.words, WordSequence{2});
  EXPECT_NEAR(two_words.log_score, 3.0 * std::log(0.8) + std::log(1.0 / 3), 1e-12);

  lm.start_log_prob << std::log(0.98), std::log(0.01), std::log(0.01);
  lm.transition_log_prob.row(0) << std::log(0.01), std::log(0.98), std::log(0.01);
  auto split = oracles::brute_sequence_decode(lp, dict, lm, 1.0);
  EXPECT_EQ(split.words, (WordSequence{0, 1}));
  EXPECT_NEAR(split.log_score, 3.0 * std::log(0.8) + 2.0 * std::log(0.98), 1e-12);
}

TEST(Oracle, DirectSmoothingOfSimpleStrokes) {
  PointList flat = {{2, 3, 0}, {2, 3, 0}, {2, 3, 0}, {7, 1, 1}};
  auto s = oracles::direct_gaussian_smooth(flat, 1.0);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    EXPECT_NEAR(s[i].x, flat[i].x, 1e-15);
    EXPECT_NEAR(s[i].y, flat[i].y, 1e-15);
  }
  // three points with delta 1: middle weights e^-0.5, 1, e^-0.5
  PointList three = {{0, 0, 0}, {1, 0, 0}, {5, 0, 0}};
  auto t = oracles::direct_gaussian_smooth(three, 1.0);
  const double w = std::exp(-0.5);
  EXPECT_NEAR(t[1].x, (w * 0 + 1 + w * 5) / (1 + 2 * w), 1e-15);
  EXPECT_NEAR(t[0].x, (0 + w * 1 + std::exp(-2.0) * 5) / (1 + w + std::exp(-2.0)), 1e-15);
}

TEST(Oracle, TangentAnglesByHand) {
  PointList pts = {{0, 0, 0}, {1, 1, 0}, {2, 0, 0}, {5, 5, 1}, {3, 5, 2}, {2, 5, 2}};
  auto a = oracles::complex_tangent_angles(pts);
  EXPECT_NEAR(a[0], std::numbers::pi / 4, 1e-15);
  EXPECT_NEAR(a[1], 0.0, 1e-15);
  EXPECT_NEAR(a[2], -std::numbers::pi / 4, 1e-15);
  EXPECT_EQ(a[3], 0.0);
  EXPECT_EQ(a[4], std::numbers::pi);
  EXPECT_EQ(a[5], std::numbers::pi);
}

TEST(Oracle, FiniteDifferencesOfAQuadratic) {
  auto loss = [](const std::vector<double>& v) { return 3.0 * v[0] * v[0] + v[0] * v[1] - 2.0 * v[1]; };
  auto g = oracles::finite_difference_gradient(loss, {0.5, -1.5}, 1e-5);
  EXPECT_NEAR(g[0], 6.0 * 0.5 - 1.5, 1e-9);
  EXPECT_NEAR(g[1], 0.5 - 2.0, 1e-9);
  EXPECT_THROW(oracles::finite_difference_gradient(loss, {0.0, 0.0}, 1e-2), ConfigError);
  auto blows_up = [](const std::vector<double>& v) { return std::log(v[0]); };
  EXPECT_THROW(oracles::finite_difference_gradient(blows_up, {0.0}, 1e-5), DataError);
}

}  // namespace
