// SPDX-License-Identifier: Apache-2.0
// JSON mapping for configuration structs. Readers are strict: every field
// is required and errors name the offending path.
#pragma once

#include <string>

#include <json.hpp>

#include <bpnet/error.hpp>
#include <bpnet/model.hpp>

namespace bpnet::json_io {

using nlohmann::json;

/// Reads `object[key]` as T or throws Data naming `context.key`.
template <typename T>
T field(const json &object, const std::string &key, const std::string &context) {
  const std::string path = context.empty() ? key : context + "." + key;
  if (!object.is_object() || !object.contains(key))
    fail(ErrorKind::Data, "missing config field '" + path + "'");
  try {
    return object.at(key).get<T>();
  } catch (const json::exception &) {
    fail(ErrorKind::Data, "config field '" + path + "' has the wrong type");
  }
}

json to_json(const model::ModelConfig &config);
model::ModelConfig model_config_from_json(const json &j, const std::string &context);

} // namespace bpnet::json_io
