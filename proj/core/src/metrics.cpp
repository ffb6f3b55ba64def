#include "tattnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tattnet/errors.hpp"
#include "tattnet/text_io.hpp"

namespace tattnet {

std::size_t ScoredSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

namespace {

void check_scored(const ScoredSet& s) {
  if (s.scores.empty()) throw ContractError("scored set is empty");
  if (s.scores.size() != s.labels.size()) throw ContractError("scores and labels differ in length");
  for (int y : s.labels)
    if (y != 0 && y != 1) throw ContractError("labels must be 0 or 1");
}

void check_both_classes(const ScoredSet& s) {
  check_scored(s);
  const std::size_t pos = s.positives();
  if (pos == 0 || pos == s.size()) throw ContractError("AUROC needs both classes present");
}

std::vector<std::size_t> descending_order(const ScoredSet& s) {
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&s](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  return order;
}

}  // namespace

double auroc(const ScoredSet& s) {
  check_both_classes(s);
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&s](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
  // Sum of (1-based, tie-averaged) ranks of the positives.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && s.scores[order[j + 1]] == s.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (s.labels[order[k]] == 1) rank_sum += avg_rank;
    i = j + 1;
  }
  const double pos = static_cast<double>(s.positives());
  const double neg = static_cast<double>(n) - pos;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double auroc_trapezoid(const ScoredSet& s) {
  check_both_classes(s);
  const std::vector<std::size_t> order = descending_order(s);
  const double pos = static_cast<double>(s.positives());
  const double neg = static_cast<double>(s.size()) - pos;
  double tp = 0.0, fp = 0.0, area = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    double dtp = 0.0, dfp = 0.0;
    std::size_t j = i;
    while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) {
      (s.labels[order[j]] == 1 ? dtp : dfp) += 1.0;
      ++j;
    }
    // Trapezoid between (fp, tp) and (fp + dfp, tp + dtp), in unnormalized units.
    area += dfp * (tp + 0.5 * dtp);
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return area / (pos * neg);
}

double auprc(const ScoredSet& s) {
  check_scored(s);
  const std::size_t pos = s.positives();
  if (pos == 0) throw ContractError("AUPRC needs at least one positive");
  const std::vector<std::size_t> order = descending_order(s);
  double tp = 0.0, ap = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (s.labels[order[k]] == 1) {
      tp += 1.0;
      ap += tp / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(pos);
}

MetricsReport make_report(const ScoredSet& s, std::uint64_t seed) {
  MetricsReport r;
  r.auroc = auroc(s);
  r.auprc = auprc(s);
  r.n = s.size();
  r.n_pos = s.positives();
  r.seed = seed;
  return r;
}

std::string format_report(const MetricsReport& r) {
  std::ostringstream os;
  os << "auroc=" << format_real(r.auroc) << '\n'
     << "auprc=" << format_real(r.auprc) << '\n'
     << "n=" << r.n << '\n'
     << "n_pos=" << r.n_pos << '\n'
     << "seed=" << r.seed << '\n';
  return os.str();
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed report line: " + line);
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

RepeatSummary summarize(std::span<const double> values) {
  RepeatSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / n);
  return s;
}

}  // namespace tattnet
