/*
 * Copyright 2026 The Shapalign Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "shapalign/decoders.hpp"
#include "shapalign/errors.hpp"
#include "shapalign/harness/gradcheck.hpp"
#include "test_util.hpp"

namespace shapalign {
namespace {

using testing::expect_all_near;
using testing::random_mat;
using testing::random_simplex;

CrfModel random_crf(SplitMix64& rng, std::size_t n, std::size_t labels) {
  CrfModel m = CrfModel::zeros(n, labels);
  for (double& x : m.emissions.flat()) x = 2.0 * rng.normal();
  for (double& x : m.transitions.flat()) x = 2.0 * rng.normal();
  for (double& x : m.start) x = rng.normal();
  for (double& x : m.end) x = rng.normal();
  return m;
}

// Visits every label sequence of the model's length in lexicographic order.
template <typename F>
void for_each_sequence(const CrfModel& m, F&& f) {
  std::vector<std::size_t> y(m.length(), 0);
  for (;;) {
    f(y);
    std::size_t t = y.size();
    while (t > 0 && ++y[t - 1] == m.labels()) y[--t] = 0;
    if (t == 0) return;
  }
}

TEST(Crf, ZeroPotentialsAreUniform) {
  const CrfModel m = CrfModel::zeros(4, 3);
  const std::vector<std::size_t> gold = {0, 2, 1, 1};
  EXPECT_NEAR(crf_nll(m, gold), 4 * std::log(3.0), 1e-12);
  EXPECT_EQ(crf_decode(m), (std::vector<std::size_t>{0, 0, 0, 0}));
}

TEST(Crf, SinglePositionIsSoftmax) {
  CrfModel m = CrfModel::zeros(1, 2);
  m.emissions(0, 0) = 0.3;
  m.emissions(0, 1) = -1.2;
  const std::vector<std::size_t> gold = {1};
  EXPECT_NEAR(crf_nll(m, gold), 1.2 + std::log(std::exp(0.3) + std::exp(-1.2)), 1e-14);
}

TEST(Crf, DominantDiagonalDecodesEmissionArgmax) {
  CrfModel m = CrfModel::zeros(4, 4);
  for (std::size_t t = 0; t < 4; ++t) m.emissions(t, (t * 3) % 4) = 50.0;
  EXPECT_EQ(crf_decode(m), (std::vector<std::size_t>{0, 3, 2, 1}));
}

TEST(Crf, MatchesBruteForceEnumeration) {
  SplitMix64 rng(51);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 1 + rng.below(5);
    const std::size_t labels = 2 + rng.below(3);
    const CrfModel m = random_crf(rng, n, labels);
    double log_z = -std::numeric_limits<double>::infinity();
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> argmax;
    for_each_sequence(m, [&](const std::vector<std::size_t>& y) {
      const double s = crf_score(m, y);
      const double hi = std::max(log_z, s);
      log_z = hi + std::log(std::exp(log_z - hi) + std::exp(s - hi));
      if (s > best) {
        best = s;
        argmax = y;
      }
    });
    EXPECT_NEAR(crf_log_partition(m), log_z, 1e-9);
    EXPECT_NEAR(crf_nll(m, argmax), log_z - best, 1e-9);
    EXPECT_EQ(crf_decode(m), argmax);
  }
}

TEST(Crf, MarginalsMatchEnumeration) {
  SplitMix64 rng(52);
  const CrfModel m = random_crf(rng, 4, 3);
  Mat expected(4, 3);
  const double log_z = crf_log_partition(m);
  for_each_sequence(m, [&](const std::vector<std::size_t>& y) {
    const double p = std::exp(crf_score(m, y) - log_z);
    for (std::size_t t = 0; t < 4; ++t) expected(t, y[t]) += p;
  });
  expect_all_near(crf_marginals(m).flat(), expected.flat(), 1e-12);
}

TEST(Crf, GradientsMatchFiniteDifferences) {
  const auto r = harness::gradcheck_crf(99, 100);
  EXPECT_EQ(r.instances, 100u);
  EXPECT_LT(r.max_rel_err, 1e-4);
}

TEST(Crf, InvalidLabels) {
  const CrfModel m = CrfModel::zeros(3, 2);
  const std::vector<std::size_t> out_of_range = {0, 2, 1};
  const std::vector<std::size_t> too_short = {0, 1};
  for (const auto* gold : {&out_of_range, &too_short}) {
    try {
      crf_nll(m, *gold);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidLabel);
    }
  }
}

WordPairHead fixture_head() {
  WordPairHead head;
  head.text_pair.layers = {
      Linear{Mat{{0.1, -0.2, 0.3, 0.0, 0.5, -0.1}, {0.2, 0.1, -0.3, 0.4, 0.0, 0.2}},
             Vec{0.01, -0.02}},
      Linear{Mat{{1.0, -0.5}, {0.3, 0.8}}, Vec{0.1, 0.0}}};
  return head;
}

TEST(PairFeatures, Fixture) {
  const Tensor3 x = pair_features(Mat{{1.0, -1.0}, {0.5, 2.0}}, fixture_head(), Channel::kText);
  expect_all_near(x.at(0, 0), std::vector<double>{0.919691113122641, -0.2776642931744473}, 1e-14);
  expect_all_near(x.at(0, 1), std::vector<double>{0.8011257264454098, 0.3331466723593783}, 1e-14);
  expect_all_near(x.at(1, 0),
                  std::vector<double>{-0.5189360415861947, -0.016503987764394573}, 1e-14);
  expect_all_near(x.at(1, 1), std::vector<double>{-0.4530431539162574, 0.5281512551162695},
                  1e-14);
}

TEST(PairFeatures, DiagonalIgnoresDifferenceSlice) {
  WordPairHead head;
  Linear l = Linear::zeros(6, 1);
  l.weight(0, 4) = 1.0;  // reads only the first M_i - M_j entry
  l.weight(0, 5) = 1.0;
  head.text_pair.layers = {l};
  const Tensor3 x = pair_features(Mat{{1.0, 3.0}, {-2.0, 0.5}}, head, Channel::kText);
  EXPECT_EQ(x(0, 0, 0), 0.0);
  EXPECT_EQ(x(1, 1, 0), 0.0);
  EXPECT_EQ(x(0, 1, 0), 3.0 + 2.5);
}

TEST(PairFeatures, ZeroWeightsGiveBias) {
  WordPairHead head;
  Linear l = Linear::zeros(6, 3);
  l.bias = Vec{1, -2, 0.5};
  head.pos_pair.layers = {l};
  SplitMix64 rng(53);
  const Tensor3 x = pair_features(random_mat(rng, 3, 2), head, Channel::kPartOfSpeech);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) expect_all_near(x.at(i, j), l.bias, 0.0);
  EXPECT_THROW(pair_features(random_mat(rng, 3, 4), head, Channel::kPartOfSpeech), Error);
}

TEST(ChannelMerge, ZeroWeightsGiveBiasRows) {
  Mlp mlp;
  Linear l = Linear::zeros(6, 2);
  l.bias = Vec{0.25, -1};
  mlp.layers = {l};
  SplitMix64 rng(54);
  const Mat out = channel_merge(random_mat(rng, 3, 2), random_mat(rng, 3, 2),
                                random_mat(rng, 3, 2), mlp);
  for (std::size_t r = 0; r < 3; ++r) expect_all_near(out.row(r), l.bias, 0.0);
  EXPECT_THROW(channel_merge(random_mat(rng, 3, 2), random_mat(rng, 2, 2),
                             random_mat(rng, 3, 2), mlp),
               Error);
}

TEST(Refine, Fixture) {
  expect_all_near(refine_distribution(std::vector<double>{0.7, 0.3},
                                      std::vector<double>{0.4, 0.6}, 1.0),
                  std::vector<double>{0.18957670665032045, 0.8104232933496797}, 1e-15);
}

TEST(Refine, EqualInputsAndZeroLambdaReduceToSoftmax) {
  const std::vector<double> p = {0.1, 0.6, 0.3};
  const Vec expected = softmax_temp(p, 1.0);
  expect_all_near(refine_distribution(p, p, 1.0), expected, 1e-15);
  expect_all_near(refine_distribution(std::vector<double>{0.5, 0.25, 0.25}, p, 0.0),
                  expected, 1e-15);
}

TEST(Refine, AlwaysADistributionAndZeroLambdaKeepsArgmax) {
  SplitMix64 rng(55);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 2 + rng.below(6);
    const auto pt = random_simplex(rng, n), ptsp = random_simplex(rng, n);
    const Vec r = refine_distribution(pt, ptsp, rng.uniform(0.0, 3.0));
    double s = 0.0;
    for (double x : r) {
      EXPECT_GE(x, 0.0);
      s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    const Vec r0 = refine_distribution(pt, ptsp, 0.0);
    EXPECT_EQ(std::max_element(r0.begin(), r0.end()) - r0.begin(),
              std::max_element(ptsp.begin(), ptsp.end()) - ptsp.begin());
  }
}

TEST(Refine, ZeroProbabilitiesAreClamped) {
  const Vec r = refine_distribution(std::vector<double>{1.0, 0.0},
                                    std::vector<double>{0.0, 1.0}, 1.0);
  EXPECT_TRUE(all_finite(r));
  EXPECT_GT(r[1], r[0]);
}

TEST(Refine, RejectsNonDistributions) {
  for (const auto& [a, b] : std::vector<std::pair<std::vector<double>, std::vector<double>>>{
           {{0.5, 0.6}, {0.5, 0.5}}, {{0.5, 0.5}, {1.2, -0.2}}, {{0.5, 0.5}, {0.5}}}) {
    try {
      refine_distribution(a, b, 1.0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_TRUE(e.kind() == ErrorKind::kNotADistribution ||
                  e.kind() == ErrorKind::kDimMismatch);
    }
  }
}

TEST(WordPairLoss, Examples) {
  Tensor3 certain(2, 2, 3);
  const std::vector<std::size_t> gold = {0, 1, 2, 1};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) certain(i, j, gold[i * 2 + j]) = 1.0;
  EXPECT_DOUBLE_EQ(wordpair_loss(certain, gold), 0.0);

  const Tensor3 uniform(2, 2, 4, 0.25);
  EXPECT_NEAR(wordpair_loss(uniform, gold), 4 * std::log(4.0), 1e-14);

  Tensor3 fixture(2, 2, 3);
  const double rows[4][3] = {{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}, {0.25, 0.25, 0.5}, {0.6, 0.3, 0.1}};
  for (std::size_t c = 0; c < 4; ++c)
    std::copy(rows[c], rows[c] + 3, fixture.at(c / 2, c % 2).begin());
  EXPECT_NEAR(wordpair_loss(fixture, gold), 2.4769384801388235, 1e-14);

  const std::vector<std::size_t> bad = {0, 1, 3, 1};
  try {
    wordpair_loss(fixture, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidLabel);
  }
}

TEST(WordPairDistributions, EveryFibreIsADistribution) {
  SplitMix64 rng(56);
  const auto layer = [&](std::size_t in, std::size_t out) {
    return Linear{random_mat(rng, out, in), testing::random_vec(rng, out)};
  };
  WordPairHead head;
  head.text_pair.layers = {layer(12, 5), layer(5, 3)};
  head.pos_pair.layers = {layer(6, 3)};
  head.position_pair.layers = {layer(6, 3)};
  head.text_classifier.layers = {layer(3, 4)};
  head.joint_classifier.layers = {layer(9, 6), layer(6, 4)};
  const Tensor3 p = wordpair_distributions(head, random_mat(rng, 5, 4), random_mat(rng, 5, 2),
                                           random_mat(rng, 5, 2));
  ASSERT_EQ(p.dim0(), 5u);
  ASSERT_EQ(p.dim2(), 4u);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (double x : p.at(i, j)) s += x;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

}  // namespace
}  // namespace shapalign
