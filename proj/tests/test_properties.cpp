// Randomized invariants across modules.

#include "scribe/decode.hpp"
#include "scribe/oracles.hpp"
#include "scribe/train.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace {

using namespace scribe;
namespace st = scribe::testing;

InkSample random_sample(st::Rng& rng, std::size_t points, int strokes, double scale) {
  InkSample s;
  s.points = st::random_polyline(rng, points, strokes, scale);
  s.sample_id = "r";
  return s;
}

TEST(Property, SoftmaxRowsAreNormalizedEvenForHugeActivations) {
  st::Rng rng(1);
  for (double scale : {1.0, 50.0, 1e3, 1e6}) {
    const Matrix lp = softmax_rows(st::random_matrix(rng, 20, 7, scale));
    ASSERT_FALSE(lp.hasNaN()) << scale;
    for (Eigen::Index t = 0; t < lp.rows(); ++t) {
      EXPECT_NEAR(lp.row(t).array().exp().sum(), 1.0, 1e-12) << scale;
      EXPECT_LE(lp.row(t).maxCoeff(), 0.0);
    }
  }
}

TEST(Property, CtcLossIsNonNegativeAndItsGradientIsFinite) {
  st::Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int N = st::uniform_int(rng, 1, 6);
    const auto T = static_cast<Eigen::Index>(st::uniform_int(rng, 1, 25));
    const auto L = static_cast<std::size_t>(st::uniform_int(rng, 0, static_cast<int>(T)));
    const LabelSequence target = st::random_labels(rng, L, N);
    const double scale = trial % 3 == 0 ? 40.0 : 2.0;
    const Matrix lp = softmax_rows(st::random_matrix(rng, T, N + 1, scale));
    const double ll = ctc_log_likelihood(lp, target);
    if (ll == kLogZero) continue;
    ASSERT_FALSE(std::isnan(ll));
    EXPECT_LE(ll, 1e-12);
    const Matrix g = ctc_gradient(lp, target);
    ASSERT_TRUE(g.allFinite()) << trial;
    for (Eigen::Index t = 0; t < T; ++t) EXPECT_NEAR(g.row(t).sum(), 0.0, 1e-9);
    EXPECT_LE(g.maxCoeff(), 1.0 + 1e-12);
    EXPECT_GE(g.minCoeff(), -1.0 - 1e-12);
  }
}

TEST(Property, CtcMatchesEnumerationOnRandomSmallCases) {
  st::Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int N = st::uniform_int(rng, 1, 3);
    const auto T = static_cast<Eigen::Index>(st::uniform_int(rng, 1, 6));
    const LabelSequence target = st::random_labels(rng, static_cast<std::size_t>(st::uniform_int(rng, 0, 3)), N);
    const Matrix lp = st::random_log_probs(rng, T, N);
    const double brute = oracles::brute_ctc_likelihood(lp, target);
    const double ll = ctc_log_likelihood(lp, target);
    if (brute == 0.0) {
      EXPECT_EQ(ll, kLogZero);
    } else {
      EXPECT_NEAR(std::exp(ll), brute, 1e-12 * std::max(1.0, brute));
    }
  }
}

TEST(Property, PreprocessingNeverEmitsNan) {
  st::Rng rng(4);
  PreprocessConfig pc;
  FeatureConfig fc;
  for (int trial = 0; trial < 60; ++trial) {
    const double scale = trial % 4 == 0 ? 1e-3 : (trial % 4 == 1 ? 1e3 : 1.0);
    auto s = random_sample(rng, static_cast<std::size_t>(st::uniform_int(rng, 1, 80)), st::uniform_int(rng, 1, 4), scale);
    const auto r = preprocess(s, pc);
    for (const auto& p : r.sample.points) {
      ASSERT_TRUE(std::isfinite(p.x) && std::isfinite(p.y)) << trial;
    }
    const auto f = extract_features(r.sample, r.band, fc);
    EXPECT_EQ(f.values.rows(), static_cast<Eigen::Index>(r.sample.points.size()));
    EXPECT_TRUE(f.values.allFinite()) << trial;
  }
}

TEST(Property, PointsCollapsedToOneLocationSurvive) {
  InkSample s;
  s.points = {{3, 3, 0}, {3, 3, 0}, {3, 3, 1}, {3, 3, 1}};
  const auto r = preprocess(s, PreprocessConfig{});
  ASSERT_FALSE(r.sample.points.empty());
  EXPECT_TRUE(extract_features(r.sample, r.band, FeatureConfig{}).values.allFinite());
}

TEST(Property, DuplicateRemovalIsIdempotentAndSmoothingKeepsStructure) {
  st::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    PointList pts = st::random_polyline(rng, 40, 3);
    // plant some repeats
    for (std::size_t i = 5; i < pts.size(); i += 7) pts[i] = pts[i - 1];
    const auto once = remove_duplicates(pts);
    EXPECT_EQ(remove_duplicates(once), once);
    for (std::size_t i = 1; i < once.size(); ++i) {
      EXPECT_FALSE(once[i] == once[i - 1]);
    }
    const double delta = 0.5 + 0.25 * (trial % 8);
    const auto smooth = gaussian_smooth(once, delta);
    ASSERT_EQ(smooth.size(), once.size());
    const auto direct = oracles::direct_gaussian_smooth(once, delta);
    for (std::size_t i = 0; i < once.size(); ++i) {
      EXPECT_EQ(smooth[i].stroke_index, once[i].stroke_index);
      EXPECT_NEAR(smooth[i].x, direct[i].x, 1e-9);
      EXPECT_NEAR(smooth[i].y, direct[i].y, 1e-9);
    }
  }
}

TEST(Property, StandardizerInvertsAndIsTranslationInvariant) {
  st::Rng rng(6);
  std::vector<FeatureSequence> seqs;
  for (int i = 0; i < 5; ++i) seqs.push_back({st::random_matrix(rng, 10 + i, 4, 3.0), {}});
  const auto s = fit_standardizer(seqs);
  for (const auto& q : seqs) {
    const auto back = invert_standardizer(apply_standardizer(q, s), s);
    EXPECT_LT((back.values - q.values).cwiseAbs().maxCoeff(), 1e-12);
  }
  auto shifted = seqs;
  for (auto& q : shifted) q.values.rowwise() += Eigen::RowVectorXd::Constant(4, 100.0);
  const auto t = fit_standardizer(shifted);
  EXPECT_LT((apply_standardizer(shifted[2], t).values - apply_standardizer(seqs[2], s).values).cwiseAbs().maxCoeff(),
            1e-9);
}

TEST(Property, RankingsAreSortedAndTopKIsMonotone) {
  st::Rng rng(7);
  std::vector<Ranking> rankings;
  std::vector<WordSequence> truths;
  for (int trial = 0; trial < 30; ++trial) {
    auto dict = st::random_dictionary(rng, 12, 4, 4);
    auto lm = st::random_bigram(rng, dict.size());
    auto lp = st::random_log_probs(rng, 10, 4);
    auto r = dictionary_rank(lp, dict, &lm, 12, 0.5 + trial % 3);
    for (std::size_t i = 1; i < r.entries.size(); ++i) EXPECT_GE(r.entries[i - 1].log_score, r.entries[i].log_score);
    auto shorter = dictionary_rank(lp, dict, &lm, 5, 0.5 + trial % 3);
    for (std::size_t i = 0; i < shorter.entries.size(); ++i) EXPECT_EQ(shorter.entries[i].words, r.entries[i].words);
    rankings.push_back(r);
    truths.push_back({st::uniform_int(rng, 0, 11)});
  }
  auto acc = top_k_accuracy(rankings, truths);
  EXPECT_LE(acc[1], acc[5]);
  EXPECT_LE(acc[5], acc[10]);
}

TEST(Property, NarrowBeamNeverBeatsTheExhaustiveOptimum) {
  st::Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto T = static_cast<Eigen::Index>(st::uniform_int(rng, 2, 7));
    auto lp = st::random_log_probs(rng, T, 2, 2.0);
    auto dict = st::random_dictionary(rng, 3, 2, 2);
    auto lm = st::random_bigram(rng, dict.size());
    const auto brute = oracles::brute_sequence_decode(lp, dict, lm);
    for (std::size_t beam : {1u, 2u, 4u}) {
      const auto h = sequence_decode(lp, dict, lm, beam);
      if (h.log_score == kLogZero) continue;
      EXPECT_LE(h.log_score, brute.log_score + 1e-9) << trial << " beam " << beam;
    }
  }
}

TEST(Property, BigramRowsStayStochastic) {
  st::Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto W = static_cast<std::size_t>(st::uniform_int(rng, 1, 9));
    std::vector<WordSequence> corpus;
    for (int i = st::uniform_int(rng, 0, 40); i > 0; --i) {
      WordSequence s;
      for (int j = st::uniform_int(rng, 1, 5); j > 0; --j) s.push_back(st::uniform_int(rng, 0, static_cast<int>(W) - 1));
      corpus.push_back(s);
    }
    const double k = trial % 2 ? 0.0 : 0.1 * (trial + 1);
    auto m = train_bigram(corpus, W, k);
    EXPECT_NEAR(m.start_log_prob.array().exp().sum(), 1.0, 1e-9);
    for (Eigen::Index r = 0; r < m.transition_log_prob.rows(); ++r) {
      EXPECT_NEAR(m.transition_log_prob.row(r).array().exp().sum(), 1.0, 1e-9);
    }
    EXPECT_FALSE(m.transition_log_prob.hasNaN());
  }
}

TEST(Property, ModelFilesRoundTripForRandomShapes) {
  st::Rng rng(10);
  for (int trial = 0; trial < 8; ++trial) {
    ModelConfig mc;
    mc.hidden = static_cast<std::size_t>(st::uniform_int(rng, 1, 12));
    auto m = init_model(mc, Alphabet::make_default(static_cast<std::size_t>(st::uniform_int(rng, 1, 42))),
                        static_cast<std::uint64_t>(trial));
    m.standardizer.mean = st::random_matrix(rng, 1, 14).row(0).transpose();
    m.standardizer.std = st::random_matrix(rng, 1, 14).cwiseAbs().row(0).transpose();
    const auto back = deserialize_model(serialize_model(m));
    EXPECT_EQ(back.weights.flatten(), m.weights.flatten());
    EXPECT_EQ(back.standardizer.mean, m.standardizer.mean);
    EXPECT_EQ(serialize_model(back), serialize_model(m));
  }
}

TEST(Property, InkRoundTripIsBitExact) {
  st::Rng rng(11);
  const Alphabet a = Alphabet::make_default(5);
  std::vector<InkSample> samples;
  for (int i = 0; i < 10; ++i) {
    auto s = random_sample(rng, static_cast<std::size_t>(st::uniform_int(rng, 1, 30)), 3, 1e3);
    s.sample_id = "s" + std::to_string(i);
    if (i % 2) s.transcription = st::random_labels(rng, 3, 5);
    samples.push_back(s);
  }
  std::istringstream in(format_ink(samples, a));
  const auto back = parse_ink(in);
  EXPECT_EQ(back.samples, samples);
}

}  // namespace
