#include <gtest/gtest.h>

#include <tattnet/errors.hpp>
#include <tattnet/journey.hpp>
#include <tattnet/pipeline.hpp>
#include <tattnet/synthetic.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "support/test_support.hpp"

using namespace tattnet;
using tattnet::testing::random_journey;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<PatientJourney> random_set(std::size_t n, std::uint64_t seed, std::size_t N = 3) {
  std::mt19937_64 rng(seed);
  std::vector<PatientJourney> out;
  for (std::size_t k = 0; k < n; ++k) {
    PatientJourney j = random_journey(N, 2 + k % 5, 4, 3, rng, k % 2 == 0);
    j.id = "p" + std::to_string(k);
    j.label = k % 3 == 0 ? 1 : 0;
    out.push_back(std::move(j));
  }
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::path(::testing::TempDir()) / ("tattnet_" + name);
}

SyntheticConfig small_synthetic() {
  SyntheticConfig c;
  c.journeys = 200;
  c.features = 4;
  c.min_visits = 4;
  c.max_visits = 10;
  c.diagnosis_codes = 6;
  c.procedure_codes = 5;
  return c;
}

}  // namespace

TEST(Ingestion, EmptyFileGivesEmptyDataset) {
  EXPECT_TRUE(parse_journeys("").empty());
  EXPECT_TRUE(parse_journeys("\n  \n").empty());
}

TEST(Ingestion, ParsesDocumentedRecord) {
  const auto js = parse_journeys(
      R"({"id":"a","mu":[0,1.5,4],"r":[[1,2,3],[4,null,6]],"g_c":3,"r_c":[0,2],"g_d":2,"r_d":[],"label":1})"
      "\n");
  ASSERT_EQ(js.size(), 1u);
  const PatientJourney& j = js[0];
  EXPECT_EQ(j.id, "a");
  EXPECT_EQ(j.r, Tensor::matrix({{1, 2, 3}, {4, 4, 6}}));
  EXPECT_EQ(j.mu, Tensor::vector({0, 1.5, 4}));
  EXPECT_EQ(j.r_c, Tensor::vector({1, 0, 1}));
  EXPECT_EQ(j.r_d, Tensor::vector({0, 0}));
  EXPECT_EQ(j.label, 1);
  ASSERT_TRUE(j.observed);
  EXPECT_EQ(*j.observed, Tensor::matrix({{1, 1, 1}, {1, 0, 1}}));
}

TEST(Ingestion, ExplicitImputedCells) {
  const auto js = parse_journeys(
      R"({"id":"a","mu":[0,1],"r":[[1,2],[3,4]],"g_c":1,"r_c":[],"g_d":1,"r_d":[0],"label":0,"obs_mask":[[1,0]]})");
  ASSERT_TRUE(js[0].observed);
  EXPECT_EQ(*js[0].observed, Tensor::matrix({{1, 1}, {0, 1}}));
}

TEST(Ingestion, DecreasingTimestampsNameTheJourney) {
  try {
    parse_journeys(R"({"id":"late","mu":[0,3,2],"r":[[1,2,3]],"g_c":1,"r_c":[],"g_d":1,"r_d":[],"label":0})");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("late"), std::string::npos) << msg;
    EXPECT_NE(msg.find("mu"), std::string::npos) << msg;
    EXPECT_NE(msg.find("ordering"), std::string::npos) << msg;
  }
}

TEST(Ingestion, MalformedRecordsRejected) {
  const std::string ok = R"({"id":"a","mu":[0],"r":[[1]],"g_c":1,"r_c":[],"g_d":1,"r_d":[],"label":0})";
  EXPECT_THROW(parse_journeys("{not json"), DataError);
  EXPECT_THROW(parse_journeys(ok + "\n" + ok), DataError);  // duplicate id
  EXPECT_THROW(parse_journeys(R"({"id":"a","mu":[0],"r":[[1]],"g_c":1,"r_c":[],"g_d":1,"r_d":[],"label":2})"),
               DataError);
  EXPECT_THROW(parse_journeys(R"({"id":"a","mu":[0],"r":[[1]],"g_c":1,"r_c":[1],"g_d":1,"r_d":[],"label":0})"),
               DataError);
  EXPECT_THROW(parse_journeys(R"({"id":"a","mu":[0,1],"r":[[1]],"g_c":1,"r_c":[],"g_d":1,"r_d":[],"label":0})"),
               DataError);
  EXPECT_THROW(parse_journeys(R"({"id":"a","mu":[0],"r":[[1]],"g_c":1,"r_c":[],"r_d":[],"label":0})"), DataError);
  try {
    parse_journeys(ok + "\n" + R"({"id":"b","mu":[0],"r":[["x"]],"g_c":1,"r_c":[],"g_d":1,"r_d":[],"label":0})");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Ingestion, RoundTripIsBitExact) {
  std::vector<PatientJourney> js = random_set(12, 1);
  js[3].r(0, 0) = 0.1 + 0.2;
  js[4].mu[1] = 1.0 / 3.0;
  const auto path = temp_path("roundtrip.ndjson");
  save_journeys(path, js);
  const auto back = load_journeys(path);
  ASSERT_EQ(back.size(), js.size());
  for (std::size_t k = 0; k < js.size(); ++k) {
    EXPECT_EQ(back[k].id, js[k].id);
    EXPECT_EQ(back[k].r, js[k].r);
    EXPECT_EQ(back[k].mu, js[k].mu);
    EXPECT_EQ(back[k].r_c, js[k].r_c);
    EXPECT_EQ(back[k].r_d, js[k].r_d);
    EXPECT_EQ(back[k].label, js[k].label);
    EXPECT_EQ(back[k].observed, js[k].observed);
  }
  std::filesystem::remove(path);
}

TEST(Imputation, CarriesLastObservationForward) {
  Tensor observed;
  const Tensor raw = Tensor::matrix({{kNaN, 1, kNaN, kNaN, 2}, {5, kNaN, 6, kNaN, kNaN}});
  const Tensor out = impute_locf(raw, {9.0}, observed);
  EXPECT_EQ(out, Tensor::matrix({{9, 1, 1, 1, 2}, {5, 5, 6, 6, 6}}));
  EXPECT_EQ(observed, Tensor::matrix({{0, 1, 0, 0, 1}, {1, 0, 1, 0, 0}}));
  const Tensor none = impute_locf(Tensor::matrix({{kNaN}, {kNaN}}), {}, observed);
  EXPECT_EQ(none, Tensor({2, 1}));
}

TEST(Normalization, TrainStatisticsStandardize) {
  std::vector<PatientJourney> js = random_set(30, 2);
  for (PatientJourney& j : js)
    for (std::size_t t = 0; t < j.visits(); ++t) j.r(0, t) = 3.0 * j.r(0, t) + 7.0;
  const FeatureStats stats = fit_feature_stats(js);
  apply_feature_stats(js, stats);
  for (std::size_t n = 0; n < 3; ++n) {
    double sum = 0.0, sq = 0.0, count = 0.0;
    for (const PatientJourney& j : js)
      for (std::size_t t = 0; t < j.visits(); ++t) {
        sum += j.r(n, t);
        sq += j.r(n, t) * j.r(n, t);
        count += 1.0;
      }
    EXPECT_LE(std::abs(sum / count), 1e-9);
    EXPECT_NEAR(sq / count, 1.0, 1e-9);
  }
}

TEST(Normalization, ConstantFeatureBecomesZero) {
  std::vector<PatientJourney> js = random_set(10, 3);
  for (PatientJourney& j : js)
    for (std::size_t t = 0; t < j.visits(); ++t) j.r(1, t) = 4.25;
  const FeatureStats stats = fit_feature_stats(js);
  EXPECT_EQ(stats.scale[1], 1.0);
  apply_feature_stats(js, stats);
  for (const PatientJourney& j : js)
    for (std::size_t t = 0; t < j.visits(); ++t) EXPECT_EQ(j.r(1, t), 0.0);
}

TEST(Normalization, StoredStatisticsAreReappliedVerbatim) {
  const std::vector<PatientJourney> all = random_set(40, 4);
  const FeatureStats stats = fit_feature_stats(all);
  const auto path = temp_path("stats.json");
  save_feature_stats(path, stats);
  const FeatureStats back = load_feature_stats(path);
  EXPECT_EQ(back.mean, stats.mean);
  EXPECT_EQ(back.scale, stats.scale);
  std::vector<PatientJourney> a = all, b = all;
  apply_feature_stats(a, stats);
  apply_feature_stats(b, back);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].r, b[k].r);
  std::filesystem::remove(path);
}

TEST(Normalization, PreparedDataFitsOnTrainOnly) {
  SyntheticConfig c = small_synthetic();
  const std::vector<PatientJourney> all = generate_synthetic(c, 5);
  const PreparedData data = prepare_data(all, 5);
  const FeatureStats expected = fit_feature_stats(select_journeys(all, data.split.train));
  EXPECT_EQ(data.stats.mean, expected.mean);
  EXPECT_EQ(data.stats.scale, expected.scale);
  const FeatureStats with_test = fit_feature_stats(all);
  EXPECT_NE(data.stats.mean, with_test.mean);
  std::vector<PatientJourney> test = select_journeys(all, data.split.test);
  apply_feature_stats(test, expected);
  ASSERT_EQ(test.size(), data.test.size());
  for (std::size_t k = 0; k < test.size(); ++k) EXPECT_EQ(test[k].r, data.test[k].r);
}

TEST(Split, HundredJourneysGiveSeventyFiveTenFifteen) {
  const DatasetSplit s = split_journeys(random_set(100, 6), 6);
  EXPECT_EQ(s.train.size(), 75u);
  EXPECT_EQ(s.valid.size(), 10u);
  EXPECT_EQ(s.test.size(), 15u);
}

TEST(Split, DisjointCompleteAndProportional) {
  for (std::size_t n : {10u, 11u, 37u, 199u, 2000u}) {
    const auto js = random_set(n, 7);
    const DatasetSplit s = split_journeys(js, 7);
    std::set<std::string> seen;
    for (const auto* part : {&s.train, &s.valid, &s.test})
      for (const std::string& id : *part) EXPECT_TRUE(seen.insert(id).second);
    EXPECT_EQ(seen.size(), n);
    EXPECT_LE(std::abs(double(s.train.size()) - 0.75 * n), 1.0);
    EXPECT_LE(std::abs(double(s.valid.size()) - 0.10 * n), 1.0);
    EXPECT_LE(std::abs(double(s.test.size()) - 0.15 * n), 1.0);
  }
}

TEST(Split, DeterministicUnderSeed) {
  const auto js = random_set(120, 8);
  const DatasetSplit a = split_journeys(js, 42), b = split_journeys(js, 42), c = split_journeys(js, 43);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.valid, b.valid);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, TooFewJourneysRejected) { EXPECT_THROW(split_journeys(random_set(9, 9), 0), DataError); }

TEST(Split, FileRoundTrip) {
  const DatasetSplit s = split_journeys(random_set(20, 10), 10);
  const auto path = temp_path("split.json");
  save_split(path, s);
  const DatasetSplit back = load_split(path);
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.valid, s.valid);
  EXPECT_EQ(back.test, s.test);
  std::filesystem::remove(path);
  EXPECT_THROW(select_journeys(random_set(3, 1), {"nope"}), DataError);
}

TEST(ClassWeights, BalancedLabelsGiveOnes) {
  auto js = random_set(10, 11);
  for (std::size_t k = 0; k < js.size(); ++k) js[k].label = k % 2;
  const ClassWeights w = compute_class_weights(js);
  EXPECT_DOUBLE_EQ(w.negative, 1.0);
  EXPECT_DOUBLE_EQ(w.positive, 1.0);
}

TEST(ClassWeights, NinetyPercentNegatives) {
  auto js = random_set(100, 12);
  for (std::size_t k = 0; k < js.size(); ++k) js[k].label = k < 10 ? 1 : 0;
  const ClassWeights w = compute_class_weights(js);
  const double inv_neg = 1.0 / 0.9, inv_pos = 1.0 / 0.1;
  EXPECT_NEAR(w.negative, 2.0 * inv_neg / (inv_neg + inv_pos), 1e-12);
  EXPECT_NEAR(w.positive, 2.0 * inv_pos / (inv_neg + inv_pos), 1e-12);
  EXPECT_NEAR(w.negative, 0.2, 1e-12);
  EXPECT_NEAR(w.positive, 1.8, 1e-12);
}

TEST(ClassWeights, PositiveAndSumToTwo) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto js = random_set(20, trial);
    std::bernoulli_distribution coin(0.1 + 0.8 * (trial / 50.0));
    for (auto& j : js) j.label = coin(rng);
    js[0].label = 0;
    js[1].label = 1;
    const ClassWeights w = compute_class_weights(js);
    EXPECT_GT(w.negative, 0.0);
    EXPECT_GT(w.positive, 0.0);
    EXPECT_NEAR(w.negative + w.positive, 2.0, 1e-12);
  }
  auto single = random_set(10, 14);
  for (auto& j : single) j.label = 0;
  EXPECT_THROW(compute_class_weights(single), DataError);
}

TEST(Synthetic, DeterministicUnderSeed) {
  const SyntheticConfig c = small_synthetic();
  const auto a = generate_synthetic(c, 3), b = generate_synthetic(c, 3), d = generate_synthetic(c, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(format_journey(a[k]), format_journey(b[k]));
  EXPECT_NE(format_journey(a[0]), format_journey(d[0]));
}

TEST(Synthetic, JourneysAreValidAndLabelsFollowTheRules) {
  const SyntheticConfig c = small_synthetic();
  for (const PatientJourney& j : generate_synthetic(c, 5)) {
    EXPECT_NO_THROW(validate_journey(j));
    EXPECT_GE(j.visits(), c.min_visits);
    EXPECT_LE(j.visits(), c.max_visits);
    EXPECT_EQ(j.label, synthetic_label(j, c));
    EXPECT_EQ(j.label, (long_range_rule(j, c) || short_range_rule(j, c)) ? 1 : 0);
    for (std::size_t t = 1; t < j.visits(); ++t) EXPECT_GT(j.mu[t], j.mu[t - 1]);
  }
}

TEST(Synthetic, LabelsAreAFunctionOfStoredData) {
  const SyntheticConfig c = small_synthetic();
  const auto js = generate_synthetic(c, 6);
  const auto path = temp_path("synthetic.ndjson");
  save_journeys(path, js);
  const auto back = load_journeys(path);
  for (std::size_t k = 0; k < js.size(); ++k) EXPECT_EQ(synthetic_label(back[k], c), js[k].label);
  std::filesystem::remove(path);
}

TEST(Synthetic, ExtremeThresholdsWithoutNoiseGiveNoPositives) {
  SyntheticConfig c = small_synthetic();
  c.noise_scale = 0.0;
  c.long_threshold = 1e9;
  c.short_threshold = 1e9;
  for (const PatientJourney& j : generate_synthetic(c, 7)) EXPECT_EQ(j.label, 0);
}

TEST(Synthetic, PositiveRateNearConfiguredAtDefaultScale) {
  const SyntheticConfig c;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto js = generate_synthetic(c, seed);
    ASSERT_EQ(js.size(), 2000u);
    double positives = 0.0;
    for (const PatientJourney& j : js) positives += j.label;
    EXPECT_NEAR(positives / 2000.0, 0.20, 0.03) << "seed " << seed;
  }
}

TEST(Synthetic, BothRulesContributePositives) {
  const SyntheticConfig c;
  std::size_t long_only = 0, short_only = 0;
  for (const PatientJourney& j : generate_synthetic(c, 0)) {
    const bool l = long_range_rule(j, c), s = short_range_rule(j, c);
    long_only += l && !s;
    short_only += s && !l;
  }
  EXPECT_GT(long_only, 100u);
  EXPECT_GT(short_only, 100u);
}

TEST(Synthetic, InvalidConfigRejected) {
  SyntheticConfig c;
  c.features = 1;
  EXPECT_THROW(generate_synthetic(c, 0), DataError);
  c = SyntheticConfig{};
  c.min_visits = 10;
  c.max_visits = 5;
  EXPECT_THROW(generate_synthetic(c, 0), DataError);
  c = SyntheticConfig{};
  c.positive_rate = 0.9;
  EXPECT_THROW(generate_synthetic(c, 0), DataError);
}
