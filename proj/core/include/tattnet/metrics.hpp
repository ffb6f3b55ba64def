#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tattnet {

/// Positive-class scores with their 0/1 labels.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return scores.size(); }
  std::size_t positives() const;
};

/// Probability that a random positive outscores a random negative, ties
/// counted as one half (Mann-Whitney form, via average ranks).
double auroc(const ScoredSet& s);

/// Same quantity by trapezoidal integration of the ROC curve, with tied
/// scores grouped into one curve step.
double auroc_trapezoid(const ScoredSet& s);

/// Average precision: mean over positives of the precision at the rank of
/// that positive, walking scores in descending order. Ties are broken by
/// input order (earlier first).
double auprc(const ScoredSet& s);

struct MetricsReport {
  double auroc = 0.0;
  double auprc = 0.0;
  std::size_t n = 0;
  std::size_t n_pos = 0;
  std::uint64_t seed = 0;
};

MetricsReport make_report(const ScoredSet& s, std::uint64_t seed);

/// Flat "key=value" lines: auroc, auprc, n, n_pos, seed.
std::string format_report(const MetricsReport& report);
std::map<std::string, std::string> parse_key_values(const std::string& text);

struct RepeatSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

RepeatSummary summarize(std::span<const double> values);

}  // namespace tattnet
