#include "tattnet/journey.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "tattnet/errors.hpp"
#include "tattnet/text_io.hpp"

namespace tattnet {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const PatientJourney& j, const std::string& field, const std::string& what) {
  throw DataError("journey '" + j.id + "': field " + field + ": " + what);
}

bool is_binary(const Tensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return v == 0.0 || v == 1.0; });
}

}  // namespace

void validate_journey(const PatientJourney& j) {
  if (j.id.empty()) throw DataError("journey with empty id");
  if (j.r.rank() != 2 || j.r.rows() == 0 || j.r.cols() == 0) fail(j, "r", "must be a non-empty N x T matrix");
  const std::size_t N = j.r.rows(), T = j.r.cols();
  if (!all_finite(j.r)) fail(j, "r", "contains non-finite values");
  if (j.mu.rank() != 1 || j.mu.size() != T) {
    fail(j, "mu", "has " + std::to_string(j.mu.size()) + " timestamps for " + std::to_string(T) + " visits");
  }
  if (!all_finite(j.mu)) fail(j, "mu", "contains non-finite values");
  for (std::size_t t = 1; t < T; ++t) {
    if (j.mu[t] < j.mu[t - 1]) {
      fail(j, "mu", "timestamps decrease at visit " + std::to_string(t + 1) + " (ordering error)");
    }
  }
  if (j.r_c.rank() != 1 || !is_binary(j.r_c)) fail(j, "r_c", "must be a 0/1 vector");
  if (j.r_d.rank() != 1 || !is_binary(j.r_d)) fail(j, "r_d", "must be a 0/1 vector");
  if (j.label != 0 && j.label != 1) fail(j, "label", "must be 0 or 1");
  if (j.observed) {
    if (j.observed->shape() != Shape{N, T}) fail(j, "obs_mask", "shape does not match r");
    if (!is_binary(*j.observed)) fail(j, "obs_mask", "must be 0/1");
  }
}

Tensor impute_locf(const Tensor& raw, const std::vector<double>& fallback, Tensor& observed) {
  if (raw.rank() != 2) throw DimensionError("impute_locf needs N x T, got " + shape_string(raw.shape()));
  const std::size_t N = raw.rows(), T = raw.cols();
  Tensor out(raw.shape());
  observed = Tensor(raw.shape(), 1.0);
  for (std::size_t n = 0; n < N; ++n) {
    double carry = n < fallback.size() ? fallback[n] : 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      if (std::isnan(raw(n, t))) {
        out(n, t) = carry;
        observed(n, t) = 0.0;
      } else {
        out(n, t) = raw(n, t);
        carry = raw(n, t);
      }
    }
  }
  return out;
}

namespace {

Tensor read_indicator(const json& indices, std::size_t length, const PatientJourney& j, const char* field) {
  if (!indices.is_array()) fail(j, field, "must be an array of set-bit indices");
  Tensor out({length});
  for (const json& v : indices) {
    if (!v.is_number_integer()) fail(j, field, "indices must be integers");
    const long long k = v.get<long long>();
    if (k < 0 || static_cast<std::size_t>(k) >= length) {
      fail(j, field, "index " + std::to_string(k) + " out of range for length " + std::to_string(length));
    }
    out[static_cast<std::size_t>(k)] = 1.0;
  }
  return out;
}

PatientJourney parse_record(const json& rec, const LoadOptions& options) {
  PatientJourney j;
  if (!rec.is_object()) throw DataError("record is not an object");
  if (!rec.contains("id") || !rec["id"].is_string()) throw DataError("record without string id");
  j.id = rec["id"].get<std::string>();
  for (const char* key : {"mu", "r", "r_c", "r_d", "label", "g_c", "g_d"}) {
    if (!rec.contains(key)) fail(j, key, "missing");
  }

  const json& mu = rec["mu"];
  if (!mu.is_array() || mu.empty()) fail(j, "mu", "must be a non-empty array");
  const std::size_t T = mu.size();
  j.mu = Tensor({T});
  for (std::size_t t = 0; t < T; ++t) {
    if (!mu[t].is_number()) fail(j, "mu", "non-numeric timestamp");
    j.mu[t] = mu[t].get<double>();
  }

  const json& r = rec["r"];
  if (!r.is_array() || r.empty()) fail(j, "r", "must be N arrays of length T");
  const std::size_t N = r.size();
  Tensor raw({N, T});
  bool missing = false;
  for (std::size_t n = 0; n < N; ++n) {
    if (!r[n].is_array() || r[n].size() != T) {
      fail(j, "r", "row " + std::to_string(n) + " does not have " + std::to_string(T) + " entries");
    }
    for (std::size_t t = 0; t < T; ++t) {
      const json& v = r[n][t];
      if (v.is_null()) {
        raw(n, t) = std::numeric_limits<double>::quiet_NaN();
        missing = true;
      } else if (v.is_number()) {
        raw(n, t) = v.get<double>();
      } else {
        fail(j, "r", "non-numeric entry");
      }
    }
  }
  if (missing) {
    Tensor observed;
    j.r = impute_locf(raw, options.fallback_values, observed);
    j.observed = std::move(observed);
  } else {
    j.r = std::move(raw);
  }

  if (!rec["g_c"].is_number_unsigned() || !rec["g_d"].is_number_unsigned()) {
    fail(j, "g_c/g_d", "must be non-negative integers");
  }
  j.r_c = read_indicator(rec["r_c"], rec["g_c"].get<std::size_t>(), j, "r_c");
  j.r_d = read_indicator(rec["r_d"], rec["g_d"].get<std::size_t>(), j, "r_d");

  if (!rec["label"].is_number_integer()) fail(j, "label", "must be 0 or 1");
  j.label = rec["label"].get<int>();

  if (rec.contains("obs_mask")) {
    const json& imputed = rec["obs_mask"];
    if (!imputed.is_array()) fail(j, "obs_mask", "must be an array of [feature, visit] pairs");
    if (!j.observed) j.observed = Tensor({N, T}, 1.0);
    for (const json& cell : imputed) {
      if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number_unsigned() || !cell[1].is_number_unsigned()) {
        fail(j, "obs_mask", "entries must be [feature, visit] index pairs");
      }
      const std::size_t n = cell[0].get<std::size_t>(), t = cell[1].get<std::size_t>();
      if (n >= N || t >= T) fail(j, "obs_mask", "cell index out of range");
      (*j.observed)(n, t) = 0.0;
    }
  }
  validate_journey(j);
  return j;
}

}  // namespace

std::vector<PatientJourney> parse_journeys(const std::string& text, const LoadOptions& options) {
  std::vector<PatientJourney> out;
  std::unordered_set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": parse error: " + e.what());
    }
    PatientJourney j;
    try {
      j = parse_record(rec, options);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(j.id).second) throw DataError("line " + std::to_string(line_no) + ": duplicate id '" + j.id + "'");
    if (!out.empty()) {
      const PatientJourney& first = out.front();
      if (j.features() != first.features() || j.r_c.size() != first.r_c.size() || j.r_d.size() != first.r_d.size()) {
        throw DataError("line " + std::to_string(line_no) + ": journey '" + j.id +
                        "' has dimensions inconsistent with journey '" + first.id + "'");
      }
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<PatientJourney> load_journeys(const std::filesystem::path& path, const LoadOptions& options) {
  try {
    return parse_journeys(read_text_file(path), options);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_journey(const PatientJourney& j) {
  std::string s = "{\"id\":" + json_quote(j.id) + ",\"label\":" + std::to_string(j.label) + ",\"mu\":";
  append_real_array(s, j.mu.data());
  s += ",\"r\":[";
  for (std::size_t n = 0; n < j.features(); ++n) {
    if (n) s += ',';
    append_real_array(s, j.r.data().subspan(n * j.visits(), j.visits()));
  }
  s += "],\"g_c\":" + std::to_string(j.r_c.size()) + ",\"r_c\":[";
  bool first = true;
  for (std::size_t k = 0; k < j.r_c.size(); ++k) {
    if (j.r_c[k] != 0.0) {
      s += (first ? "" : ",") + std::to_string(k);
      first = false;
    }
  }
  s += "],\"g_d\":" + std::to_string(j.r_d.size()) + ",\"r_d\":[";
  first = true;
  for (std::size_t k = 0; k < j.r_d.size(); ++k) {
    if (j.r_d[k] != 0.0) {
      s += (first ? "" : ",") + std::to_string(k);
      first = false;
    }
  }
  s += ']';
  if (j.observed) {
    s += ",\"obs_mask\":[";
    first = true;
    for (std::size_t n = 0; n < j.features(); ++n)
      for (std::size_t t = 0; t < j.visits(); ++t)
        if ((*j.observed)(n, t) == 0.0) {
          s += (first ? "[" : ",[") + std::to_string(n) + "," + std::to_string(t) + "]";
          first = false;
        }
    s += ']';
  }
  s += '}';
  return s;
}

void save_journeys(const std::filesystem::path& path, const std::vector<PatientJourney>& journeys) {
  std::string out;
  for (const PatientJourney& j : journeys) {
    out += format_journey(j);
    out += '\n';
  }
  write_text_file(path, out);
}

FeatureStats fit_feature_stats(const std::vector<PatientJourney>& journeys) {
  if (journeys.empty()) throw DataError("cannot fit normalization statistics on an empty set");
  const std::size_t N = journeys.front().features();
  FeatureStats stats;
  stats.mean.assign(N, 0.0);
  stats.scale.assign(N, 1.0);
  std::vector<double> count(N, 0.0), sq(N, 0.0);
  for (const PatientJourney& j : journeys) {
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < j.visits(); ++t) {
        stats.mean[n] += j.r(n, t);
        count[n] += 1.0;
      }
  }
  for (std::size_t n = 0; n < N; ++n) stats.mean[n] /= count[n];
  for (const PatientJourney& j : journeys) {
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < j.visits(); ++t) {
        const double d = j.r(n, t) - stats.mean[n];
        sq[n] += d * d;
      }
  }
  for (std::size_t n = 0; n < N; ++n) {
    const double sd = std::sqrt(sq[n] / count[n]);
    if (sd > 0.0) {
      stats.scale[n] = sd;
    } else {
      std::cerr << "warning: feature " << n << " has zero variance; mean-centering only\n";
    }
  }
  return stats;
}

void apply_feature_stats(std::vector<PatientJourney>& journeys, const FeatureStats& stats) {
  for (PatientJourney& j : journeys) {
    if (j.features() != stats.mean.size()) {
      throw DataError("journey '" + j.id + "' has " + std::to_string(j.features()) + " features, statistics have " +
                      std::to_string(stats.mean.size()));
    }
    for (std::size_t n = 0; n < j.features(); ++n)
      for (std::size_t t = 0; t < j.visits(); ++t) j.r(n, t) = (j.r(n, t) - stats.mean[n]) / stats.scale[n];
  }
}

void save_feature_stats(const std::filesystem::path& path, const FeatureStats& stats) {
  std::string s = "{\"mean\":";
  append_real_array(s, stats.mean);
  s += ",\"std\":";
  append_real_array(s, stats.scale);
  s += "}\n";
  write_text_file(path, s);
}

FeatureStats load_feature_stats(const std::filesystem::path& path) {
  FeatureStats stats;
  try {
    const json doc = json::parse(read_text_file(path));
    stats.mean = doc.at("mean").get<std::vector<double>>();
    stats.scale = doc.at("std").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (stats.mean.size() != stats.scale.size()) throw DataError(path.string() + ": mean/std length mismatch");
  for (double s : stats.scale)
    if (!(s > 0.0)) throw DataError(path.string() + ": non-positive std");
  return stats;
}

DatasetSplit split_journeys(const std::vector<PatientJourney>& journeys, std::uint64_t seed) {
  const std::size_t n = journeys.size();
  if (n < 10) throw DataError("need at least 10 journeys to split, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(0.75 * static_cast<double>(n)));
  const auto n_valid = static_cast<std::size_t>(std::llround(0.10 * static_cast<double>(n)));
  DatasetSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < n; ++k) {
    const std::string& id = journeys[order[k]].id;
    if (k < n_train) {
      split.train.push_back(id);
    } else if (k < n_train + n_valid) {
      split.valid.push_back(id);
    } else {
      split.test.push_back(id);
    }
  }
  return split;
}

std::vector<PatientJourney> select_journeys(const std::vector<PatientJourney>& all,
                                            const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < all.size(); ++k) index.emplace(all[k].id, k);
  std::vector<PatientJourney> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("unknown journey id '" + id + "'");
    out.push_back(all[it->second]);
  }
  return out;
}

ClassWeights compute_class_weights(const std::vector<PatientJourney>& train) {
  double pos = 0.0;
  for (const PatientJourney& j : train) pos += j.label == 1 ? 1.0 : 0.0;
  const double neg = static_cast<double>(train.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw DataError("class weights need both classes in the training set");
  const double inv_pos = static_cast<double>(train.size()) / pos;
  const double inv_neg = static_cast<double>(train.size()) / neg;
  ClassWeights w;
  w.positive = 2.0 * inv_pos / (inv_pos + inv_neg);
  w.negative = 2.0 * inv_neg / (inv_pos + inv_neg);
  return w;
}

void save_split(const std::filesystem::path& path, const DatasetSplit& split) {
  auto ids = [](const std::vector<std::string>& v) {
    std::string out = "[";
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + json_quote(v[k]);
    return out + "]";
  };
  write_text_file(path, "{\"seed\":" + std::to_string(split.seed) + ",\n\"train\":" + ids(split.train) +
                            ",\n\"valid\":" + ids(split.valid) + ",\n\"test\":" + ids(split.test) + "}\n");
}

DatasetSplit load_split(const std::filesystem::path& path) {
  try {
    const json doc = json::parse(read_text_file(path));
    DatasetSplit s;
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.train = doc.at("train").get<std::vector<std::string>>();
    s.valid = doc.at("valid").get<std::vector<std::string>>();
    s.test = doc.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed split file: " + e.what());
  }
}

}  // namespace tattnet
