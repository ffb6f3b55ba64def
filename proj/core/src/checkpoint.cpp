#include "tattnet/checkpoint.hpp"

#include <vector>

#include "config_json.hpp"
#include "tattnet/errors.hpp"
#include "tattnet/text_io.hpp"

namespace tattnet {

using json = nlohmann::json;

std::string format_checkpoint(ModelParams& model) {
  std::string out = "{\"format_version\":" + std::to_string(kCheckpointFormatVersion) + ",\n\"model\":";
  out += detail::model_config_to_json(model.config).dump();
  out += ",\n\"parameters\":[";
  bool first = true;
  model.visit([&](const std::string& name, Parameter& p) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "{\"name\":" + json_quote(name) + ",\"shape\":[";
    const Shape& shape = p.value.shape();
    for (std::size_t k = 0; k < shape.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(shape[k]);
    }
    out += "],\"data\":";
    append_real_array(out, p.value.data());
    out += '}';
  });
  out += "\n]}\n";
  return out;
}

ModelParams parse_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version") || !doc.contains("model") || !doc.contains("parameters")) {
    throw DataError("checkpoint needs format_version, model and parameters");
  }
  if (doc["format_version"] != kCheckpointFormatVersion) {
    throw DataError("unsupported checkpoint format_version " + doc["format_version"].dump());
  }
  ModelConfig config;
  detail::model_config_from_json(doc["model"], config);
  ModelParams model;
  try {
    model = assemble_model(config);
  } catch (const ContractError& e) {
    throw DataError(std::string("checkpoint model config invalid: ") + e.what());
  }

  const json& params = doc["parameters"];
  if (!params.is_array()) throw DataError("checkpoint parameters must be an array");
  std::size_t k = 0;
  model.visit([&](const std::string& name, Parameter& p) {
    if (k >= params.size()) throw DataError("checkpoint is missing parameter " + name);
    const json& entry = params[k++];
    try {
      if (entry.at("name").get<std::string>() != name) {
        throw DataError("checkpoint parameter " + entry.at("name").dump() + " where " + name + " was expected");
      }
      if (entry.at("shape").get<Shape>() != p.value.shape()) {
        throw DataError("checkpoint parameter " + name + " has shape " + entry.at("shape").dump() + ", expected " +
                        shape_string(p.value.shape()));
      }
      const std::vector<double> data = entry.at("data").get<std::vector<double>>();
      if (data.size() != p.value.size()) throw DataError("checkpoint parameter " + name + " has wrong length");
      for (std::size_t i = 0; i < data.size(); ++i) p.value[i] = data[i];
    } catch (const json::exception& e) {
      throw DataError("checkpoint parameter " + name + ": " + e.what());
    }
  });
  if (k != params.size()) throw DataError("checkpoint has parameters the model does not define");
  model.zero_grad();
  return model;
}

void save_checkpoint(const std::filesystem::path& path, ModelParams& model) {
  write_text_file(path, format_checkpoint(model));
}

ModelParams load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_text_file(path)); }

}  // namespace tattnet
