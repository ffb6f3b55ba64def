#include <gtest/gtest.h>

#include <tattnet/errors.hpp>
#include <tattnet/metrics.hpp>

#include <cmath>
#include <random>

using namespace tattnet;

namespace {

double pairwise_auroc(const ScoredSet& s) {
  double credit = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.labels[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s.labels[j] != 0) continue;
      pairs += 1.0;
      if (s.scores[i] > s.scores[j]) credit += 1.0;
      if (s.scores[i] == s.scores[j]) credit += 0.5;
    }
  }
  return credit / pairs;
}

// Average precision by explicit enumeration of each positive's rank under a
// stable descending sort.
double reference_ap(const ScoredSet& s) {
  std::vector<std::size_t> order(s.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  double hits = 0.0, total = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (s.labels[order[rank]] != 1) continue;
    hits += 1.0;
    total += hits / double(rank + 1);
  }
  return total / hits;
}

ScoredSet random_instance(std::mt19937_64& rng, std::size_t max_n) {
  std::uniform_int_distribution<std::size_t> size(2, max_n);
  std::uniform_int_distribution<int> levels(0, 9);
  std::bernoulli_distribution coin(0.5), coarse(0.5);
  ScoredSet s;
  const std::size_t n = size(rng);
  const bool discrete = coarse(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    s.scores.push_back(discrete ? levels(rng) / 10.0 : unit(rng));
    s.labels.push_back(coin(rng) ? 1 : 0);
  }
  s.labels[0] = 1;
  s.labels[1] = 0;
  return s;
}

}  // namespace

TEST(Auroc, HandExample) {
  const ScoredSet s{{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}};
  EXPECT_EQ(auroc(s), 0.75);
  EXPECT_EQ(pairwise_auroc(s), 0.75);
}

TEST(Auroc, SeparatedAndTied) {
  EXPECT_EQ(auroc({{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}}), 1.0);
  EXPECT_EQ(auroc({{0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}}), 0.0);
  EXPECT_EQ(auroc({{0.5, 0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1, 1}}), 0.5);
}

TEST(Auroc, NeedsBothClasses) {
  EXPECT_THROW(auroc({{0.1, 0.2}, {1, 1}}), ContractError);
  EXPECT_THROW(auroc({{0.1, 0.2}, {0, 0}}), ContractError);
  EXPECT_THROW(auroc({{0.1}, {0, 1}}), ContractError);
}

TEST(Auroc, MatchesPairwiseCountAndTrapezoid) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const ScoredSet s = random_instance(rng, 200);
    const double expected = pairwise_auroc(s);
    EXPECT_NEAR(auroc(s), expected, 1e-12);
    EXPECT_NEAR(auroc_trapezoid(s), expected, 1e-12);
  }
}

TEST(Auroc, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    ScoredSet s = random_instance(rng, 60);
    ScoredSet t = s;
    for (double& v : t.scores) v = std::exp(3.0 * v) - 4.0;
    EXPECT_EQ(auroc(s), auroc(t));
  }
}

TEST(Auroc, FlippingLabelsComplements) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    ScoredSet s = random_instance(rng, 80);
    ScoredSet f = s;
    for (int& y : f.labels) y = 1 - y;
    EXPECT_EQ(auroc(s) + auroc(f), 1.0);
  }
}

TEST(Auprc, HandExamples) {
  EXPECT_EQ(auprc({{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}}), 1.0);
  EXPECT_EQ(auprc({{0.9, 0.8, 0.7, 0.1}, {0, 0, 0, 1}}), 0.25);
  // Precision 1 at rank 1, 2/3 at rank 3.
  EXPECT_NEAR(auprc({{0.9, 0.8, 0.7, 0.1}, {1, 0, 1, 0}}), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
}

TEST(Auprc, TiesBreakByInputOrder) {
  EXPECT_EQ(auprc({{0.5, 0.5}, {1, 0}}), 1.0);
  EXPECT_EQ(auprc({{0.5, 0.5}, {0, 1}}), 0.5);
}

TEST(Auprc, MatchesReferenceEnumeration) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const ScoredSet s = random_instance(rng, 150);
    EXPECT_NEAR(auprc(s), reference_ap(s), 1e-12);
  }
}

TEST(Auprc, RandomScoresApproachPositiveRate) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScoredSet s;
  for (int k = 0; k < 10000; ++k) {
    s.scores.push_back(unit(rng));
    s.labels.push_back(unit(rng) < 0.2 ? 1 : 0);
  }
  EXPECT_NEAR(auprc(s), 0.2, 0.05);
  EXPECT_NEAR(auroc(s), 0.5, 0.05);
}

TEST(Report, FormatAndParse) {
  const ScoredSet s{{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}};
  const MetricsReport r = make_report(s, 17);
  EXPECT_EQ(r.n, 4u);
  EXPECT_EQ(r.n_pos, 2u);
  EXPECT_EQ(r.seed, 17u);
  const auto kv = parse_key_values(format_report(r));
  EXPECT_EQ(kv.at("n"), "4");
  EXPECT_EQ(kv.at("n_pos"), "2");
  EXPECT_EQ(kv.at("seed"), "17");
  EXPECT_EQ(std::stod(kv.at("auroc")), 0.75);
  EXPECT_EQ(std::stod(kv.at("auprc")), r.auprc);
  EXPECT_EQ(format_report(r), format_report(make_report(s, 17)));
}

TEST(Report, RepeatSummary) {
  const std::vector<double> v{0.7, 0.8, 0.9};
  const RepeatSummary s = summarize(v);
  EXPECT_NEAR(s.mean, 0.8, 1e-15);
  EXPECT_NEAR(s.stddev, std::sqrt(2.0 / 300.0), 1e-15);
  const std::vector<double> one{0.5};
  EXPECT_EQ(summarize(one).stddev, 0.0);
}
