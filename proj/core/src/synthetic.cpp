#include "tattnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "tattnet/errors.hpp"

namespace tattnet {

void SyntheticConfig::validate() const {
  if (journeys == 0) throw DataError("synthetic config: journeys must be >= 1");
  if (features < 2) throw DataError("synthetic config: the planted rules need at least 2 features");
  if (min_visits < 2 || max_visits < min_visits) throw DataError("synthetic config: need 2 <= min_visits <= max_visits");
  if (diagnosis_codes <= trigger_code) throw DataError("synthetic config: trigger_code outside diagnosis codes");
  if (!(positive_rate >= 0.0 && positive_rate <= 0.75)) {
    throw DataError("synthetic config: positive_rate must lie in [0, 0.75]");
  }
  if (!(noise_scale >= 0.0) || !(mean_gap_hours > 0.0) || !(gap_limit > 0.0)) {
    throw DataError("synthetic config: noise_scale >= 0, mean_gap_hours > 0 and gap_limit > 0 required");
  }
  for (double p : {missing_rate, code_rate, decoy_rate}) {
    if (!(p >= 0.0 && p < 1.0)) throw DataError("synthetic config: rates must lie in [0, 1)");
  }
  if (early_visits == 0) throw DataError("synthetic config: early_visits must be >= 1");
}

bool long_range_rule(const PatientJourney& j, const SyntheticConfig& c) {
  if (j.r_c[c.trigger_code] == 0.0) return false;
  const std::size_t last = std::min(c.early_visits, j.visits());
  for (std::size_t t = 0; t < last; ++t)
    if (j.r(0, t) > c.long_threshold) return true;
  return false;
}

bool short_range_rule(const PatientJourney& j, const SyntheticConfig& c) {
  for (std::size_t t = 1; t < j.visits(); ++t) {
    if (j.r(1, t) - j.r(1, t - 1) > c.short_threshold && j.mu[t] - j.mu[t - 1] < c.gap_limit) return true;
  }
  return false;
}

int synthetic_label(const PatientJourney& j, const SyntheticConfig& c) {
  return long_range_rule(j, c) || short_range_rule(j, c) ? 1 : 0;
}

std::vector<PatientJourney> generate_synthetic(const SyntheticConfig& c, std::uint64_t seed) {
  c.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> gap_dist(1.0 / c.mean_gap_hours);
  std::uniform_int_distribution<std::size_t> visit_count(c.min_visits, c.max_visits);

  // Each rule fires independently with probability q, so P(label) = 1 - (1 - q)^2.
  const double event_rate = 1.0 - std::sqrt(1.0 - c.positive_rate);
  const double spike_rate = std::min(1.0, 2.0 * event_rate);
  constexpr double kAutoregression = 0.7;

  const std::size_t N = c.features;
  std::vector<double> offset(N, 0.0), spread(N, 1.0);
  for (std::size_t n = 2; n < N; ++n) {
    offset[n] = 2.0 * unit(rng) - 1.0;
    spread[n] = 0.5 + unit(rng);
  }

  std::vector<PatientJourney> out;
  out.reserve(c.journeys);
  for (std::size_t k = 0; k < c.journeys; ++k) {
    PatientJourney j;
    char id[32];
    std::snprintf(id, sizeof id, "j%05zu", k);
    j.id = id;
    const std::size_t T = visit_count(rng);

    j.mu = Tensor({T});
    for (std::size_t t = 1; t < T; ++t) j.mu[t] = j.mu[t - 1] + 0.05 + gap_dist(rng);

    Tensor raw({N, T});
    for (std::size_t n = 0; n < N; ++n) {
      double x = c.noise_scale * normal(rng);
      for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) x = kAutoregression * x + c.noise_scale * normal(rng);
        raw(n, t) = offset[n] + spread[n] * x;
      }
    }

    j.r_c = Tensor({c.diagnosis_codes});
    for (std::size_t b = 0; b < c.diagnosis_codes; ++b) j.r_c[b] = unit(rng) < c.code_rate ? 1.0 : 0.0;
    j.r_c[c.trigger_code] = unit(rng) < 0.5 ? 1.0 : 0.0;
    j.r_d = Tensor({c.procedure_codes});
    for (std::size_t b = 0; b < c.procedure_codes; ++b) j.r_d[b] = unit(rng) < c.code_rate ? 1.0 : 0.0;

    // Cells carrying planted events are kept observed.
    std::vector<std::pair<std::size_t, std::size_t>> protected_cells;
    if (unit(rng) < spike_rate) {
      const std::size_t t = std::uniform_int_distribution<std::size_t>(0, std::min(c.early_visits, T) - 1)(rng);
      raw(0, t) = c.spike_value + c.noise_scale * normal(rng);
      protected_cells.emplace_back(0, t);
    }
    auto plant_jump = [&](double gap) {
      const std::size_t t = std::uniform_int_distribution<std::size_t>(1, T - 1)(rng);
      const double shift = j.mu[t - 1] + gap - j.mu[t];
      for (std::size_t s = t; s < T; ++s) j.mu[s] += shift;
      const double rise = c.jump_size + c.noise_scale * std::abs(normal(rng));
      for (std::size_t s = t; s < T; ++s) raw(1, s) += rise;
      protected_cells.emplace_back(1, t - 1);
      protected_cells.emplace_back(1, t);
    };
    if (unit(rng) < c.decoy_rate) plant_jump(c.gap_limit * (2.0 + 4.0 * unit(rng)));
    if (unit(rng) < event_rate) plant_jump(c.gap_limit * (0.1 + 0.8 * unit(rng)));

    if (c.missing_rate > 0.0) {
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t t = 0; t < T; ++t) {
          const bool keep = std::find(protected_cells.begin(), protected_cells.end(), std::make_pair(n, t)) !=
                            protected_cells.end();
          if (unit(rng) < c.missing_rate && !keep) raw(n, t) = std::numeric_limits<double>::quiet_NaN();
        }
      Tensor observed;
      j.r = impute_locf(raw, {}, observed);
      j.observed = std::move(observed);
    } else {
      j.r = std::move(raw);
    }

    j.label = synthetic_label(j, c);
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace tattnet
