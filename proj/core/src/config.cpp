#include "tattnet/config.hpp"

#include <functional>
#include <map>

#include "config_json.hpp"
#include "tattnet/errors.hpp"
#include "tattnet/text_io.hpp"

namespace tattnet {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string activation_name(Activation a) { return a == Activation::kTanh ? "tanh" : "sigmoid"; }

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw DataError("unknown activation '" + name + "' (expected tanh or sigmoid)");
}

namespace {

using Setter = std::function<void(const json&)>;

template <class T>
Setter bind(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

void apply_section(const json& j, const std::string& section, const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) throw DataError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw DataError("config section '" + section + "': unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw DataError("config section '" + section + "', key '" + key + "': " + e.what());
    }
  }
}

void train_from_json(const json& j, TrainConfig& c) {
  apply_section(j, "train",
                {{"optimizer", bind(c.optimizer)},
                 {"learning_rate", bind(c.learning_rate)},
                 {"beta1", bind(c.beta1)},
                 {"beta2", bind(c.beta2)},
                 {"epsilon", bind(c.epsilon)},
                 {"epochs", bind(c.epochs)},
                 {"batch_size", bind(c.batch_size)},
                 {"patience", bind(c.patience)},
                 {"repeats", bind(c.repeats)},
                 {"seed", bind(c.seed)}});
}

void data_from_json(const json& j, SyntheticConfig& c) {
  apply_section(j, "data",
                {{"journeys", bind(c.journeys)},
                 {"features", bind(c.features)},
                 {"min_visits", bind(c.min_visits)},
                 {"max_visits", bind(c.max_visits)},
                 {"diagnosis_codes", bind(c.diagnosis_codes)},
                 {"procedure_codes", bind(c.procedure_codes)},
                 {"positive_rate", bind(c.positive_rate)},
                 {"noise_scale", bind(c.noise_scale)},
                 {"mean_gap_hours", bind(c.mean_gap_hours)},
                 {"missing_rate", bind(c.missing_rate)},
                 {"code_rate", bind(c.code_rate)},
                 {"early_visits", bind(c.early_visits)},
                 {"trigger_code", bind(c.trigger_code)},
                 {"long_threshold", bind(c.long_threshold)},
                 {"spike_value", bind(c.spike_value)},
                 {"short_threshold", bind(c.short_threshold)},
                 {"jump_size", bind(c.jump_size)},
                 {"gap_limit", bind(c.gap_limit)},
                 {"decoy_rate", bind(c.decoy_rate)}});
}

}  // namespace

namespace detail {

ordered_json model_config_to_json(const ModelConfig& c) {
  ordered_json j;
  j["features"] = c.features;
  j["max_visits"] = c.max_visits;
  j["heads"] = c.heads;
  j["key_dim"] = c.key_dim;
  j["ffn_dim"] = c.ffn_dim;
  j["stacked_depth"] = c.stacked_depth;
  j["hidden"] = c.hidden;
  j["coupled"] = c.coupled;
  j["diagnosis_codes"] = c.diagnosis_codes;
  j["procedure_codes"] = c.procedure_codes;
  j["activation"] = activation_name(c.activation);
  j["disable_stacked"] = c.disable_stacked;
  j["disable_short"] = c.disable_short;
  j["disable_long"] = c.disable_long;
  j["disable_coupled"] = c.disable_coupled;
  j["seed"] = c.seed;
  return j;
}

void model_config_from_json(const json& j, ModelConfig& c) {
  apply_section(j, "model",
                {{"features", bind(c.features)},
                 {"max_visits", bind(c.max_visits)},
                 {"heads", bind(c.heads)},
                 {"key_dim", bind(c.key_dim)},
                 {"ffn_dim", bind(c.ffn_dim)},
                 {"stacked_depth", bind(c.stacked_depth)},
                 {"hidden", bind(c.hidden)},
                 {"coupled", bind(c.coupled)},
                 {"diagnosis_codes", bind(c.diagnosis_codes)},
                 {"procedure_codes", bind(c.procedure_codes)},
                 {"activation", [&c](const json& v) { c.activation = parse_activation(v.get<std::string>()); }},
                 {"disable_stacked", bind(c.disable_stacked)},
                 {"disable_short", bind(c.disable_short)},
                 {"disable_long", bind(c.disable_long)},
                 {"disable_coupled", bind(c.disable_coupled)},
                 {"seed", bind(c.seed)}});
}

}  // namespace detail

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig rc;
  apply_section(doc, "root",
                {{"model", [&rc](const json& v) { detail::model_config_from_json(v, rc.model); }},
                 {"train", [&rc](const json& v) { train_from_json(v, rc.train); }},
                 {"data", [&rc](const json& v) { data_from_json(v, rc.data); }},
                 {"fallback_values", bind(rc.fallback_values)}});
  try {
    rc.model.validate();
    rc.train.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("invalid config: ") + e.what());
  }
  rc.data.validate();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text_file(path)); }

std::string format_run_config(const RunConfig& rc) {
  ordered_json doc;
  doc["model"] = detail::model_config_to_json(rc.model);
  const TrainConfig& t = rc.train;
  doc["train"] = {{"optimizer", t.optimizer}, {"learning_rate", t.learning_rate}, {"beta1", t.beta1},
                  {"beta2", t.beta2},         {"epsilon", t.epsilon},             {"epochs", t.epochs},
                  {"batch_size", t.batch_size}, {"patience", t.patience},         {"repeats", t.repeats},
                  {"seed", t.seed}};
  const SyntheticConfig& d = rc.data;
  doc["data"] = {{"journeys", d.journeys},
                 {"features", d.features},
                 {"min_visits", d.min_visits},
                 {"max_visits", d.max_visits},
                 {"diagnosis_codes", d.diagnosis_codes},
                 {"procedure_codes", d.procedure_codes},
                 {"positive_rate", d.positive_rate},
                 {"noise_scale", d.noise_scale},
                 {"mean_gap_hours", d.mean_gap_hours},
                 {"missing_rate", d.missing_rate},
                 {"code_rate", d.code_rate},
                 {"early_visits", d.early_visits},
                 {"trigger_code", d.trigger_code},
                 {"long_threshold", d.long_threshold},
                 {"spike_value", d.spike_value},
                 {"short_threshold", d.short_threshold},
                 {"jump_size", d.jump_size},
                 {"gap_limit", d.gap_limit},
                 {"decoy_rate", d.decoy_rate}};
  doc["fallback_values"] = rc.fallback_values;
  return doc.dump(2) + "\n";
}

}  // namespace tattnet
