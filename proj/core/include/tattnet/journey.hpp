#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tattnet/coupled_head.hpp"
#include "tattnet/tensor.hpp"

namespace tattnet {

/// One patient: a feature-by-visit matrix, visit timestamps in hours, static
/// diagnosis/procedure code indicators and a binary outcome.
struct PatientJourney {
  std::string id;
  Tensor r;    // N x T, finite after imputation
  Tensor mu;   // T, nondecreasing
  Tensor r_c;  // g_c, entries in {0, 1}
  Tensor r_d;  // g_d, entries in {0, 1}
  int label = 0;
  /// N x T, 1 = measured, 0 = imputed. Absent means everything was measured.
  std::optional<Tensor> observed;

  std::size_t features() const { return r.rows(); }
  std::size_t visits() const { return r.cols(); }
};

/// Throws DataError naming the journey id and the offending field.
void validate_journey(const PatientJourney& journey);

/// Fills missing (NaN) cells of `raw` by carrying the last observation
/// forward; cells before the first observation of a feature take
/// `fallback[feature]` (0 when the vector is shorter). Returns the imputed
/// matrix and writes the observation mask.
Tensor impute_locf(const Tensor& raw, const std::vector<double>& fallback, Tensor& observed);

struct LoadOptions {
  std::vector<double> fallback_values;
};

/// Newline-delimited JSON, one journey per line; see README for the schema.
std::vector<PatientJourney> load_journeys(const std::filesystem::path& path, const LoadOptions& options = {});
std::vector<PatientJourney> parse_journeys(const std::string& text, const LoadOptions& options = {});
void save_journeys(const std::filesystem::path& path, const std::vector<PatientJourney>& journeys);
std::string format_journey(const PatientJourney& journey);

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation, or 1 for constant features
};

/// Per-feature standardization pooled over every visit of `journeys`.
FeatureStats fit_feature_stats(const std::vector<PatientJourney>& journeys);
void apply_feature_stats(std::vector<PatientJourney>& journeys, const FeatureStats& stats);
void save_feature_stats(const std::filesystem::path& path, const FeatureStats& stats);
FeatureStats load_feature_stats(const std::filesystem::path& path);

struct DatasetSplit {
  std::vector<std::string> train, valid, test;
  std::uint64_t seed = 0;
};

/// Seeded 75:10:15 permutation split; needs at least 10 journeys.
DatasetSplit split_journeys(const std::vector<PatientJourney>& journeys, std::uint64_t seed);

/// JSON object {"seed", "train", "valid", "test"} with id arrays.
void save_split(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit load_split(const std::filesystem::path& path);

/// Journeys of `all` whose ids are in `ids`, in the order of `ids`.
std::vector<PatientJourney> select_journeys(const std::vector<PatientJourney>& all,
                                            const std::vector<std::string>& ids);

/// Inverse class frequency, normalized so that negative + positive = 2.
ClassWeights compute_class_weights(const std::vector<PatientJourney>& train);

}  // namespace tattnet
