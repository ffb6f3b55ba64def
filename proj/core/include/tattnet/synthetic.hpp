#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tattnet/journey.hpp"

namespace tattnet {

/// Generator for journeys whose labels follow two planted rules:
///
///  long-range:  feature 0 exceeds `long_threshold` at one of the first
///               `early_visits` visits AND diagnosis code `trigger_code` is set;
///  short-range: for some consecutive visits (t-1, t), feature 1 rises by more
///               than `short_threshold` while mu_t - mu_{t-1} < `gap_limit`.
///
/// label = long-range OR short-range. The long rule is only visible through
/// the static codes, which reach the model via the long-term path; the short
/// rule needs the visit gap next to a local change. Decoys (feature-0 spikes
/// without the code, feature-1 jumps across wide gaps) make both conjuncts
/// necessary.
struct SyntheticConfig {
  std::size_t journeys = 2000;
  std::size_t features = 16;
  std::size_t min_visits = 8;
  std::size_t max_visits = 48;
  std::size_t diagnosis_codes = 32;
  std::size_t procedure_codes = 32;
  double positive_rate = 0.2;
  double noise_scale = 0.3;
  double mean_gap_hours = 4.0;
  double missing_rate = 0.1;
  double code_rate = 0.1;

  std::size_t early_visits = 3;
  std::size_t trigger_code = 0;
  double long_threshold = 2.0;
  double spike_value = 3.5;

  double short_threshold = 1.5;
  double jump_size = 2.5;
  double gap_limit = 1.0;
  double decoy_rate = 0.3;

  /// Throws DataError on inconsistent settings.
  void validate() const;
};

bool long_range_rule(const PatientJourney& journey, const SyntheticConfig& config);
bool short_range_rule(const PatientJourney& journey, const SyntheticConfig& config);
/// Label implied by the planted rules for the stored features, timestamps and codes.
int synthetic_label(const PatientJourney& journey, const SyntheticConfig& config);

std::vector<PatientJourney> generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace tattnet
