// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <map>
#include <sstream>

#include <bpnet/error.hpp>
#include <bpnet/json_io.hpp>
#include <bpnet/model.hpp>

namespace bpnet {
namespace json_io {

json to_json(const model::ModelConfig &c) {
  return json{{"kernel_size", c.kernel_size},
              {"dilations", c.dilations},
              {"block_channels", c.block_channels},
              {"input_stem_channels", c.input_stem_channels},
              {"head_channels", c.head_channels},
              {"output_channels", c.output_channels},
              {"dropout_rate", c.dropout_rate}};
}

model::ModelConfig model_config_from_json(const json &j, const std::string &context) {
  model::ModelConfig c;
  c.kernel_size = field<std::size_t>(j, "kernel_size", context);
  c.dilations = field<std::vector<std::size_t>>(j, "dilations", context);
  c.block_channels = field<std::vector<std::size_t>>(j, "block_channels", context);
  c.input_stem_channels = field<std::size_t>(j, "input_stem_channels", context);
  c.head_channels = field<std::size_t>(j, "head_channels", context);
  c.output_channels = field<std::size_t>(j, "output_channels", context);
  c.dropout_rate = field<double>(j, "dropout_rate", context);
  try {
    model::validate(c);
  } catch (const Error &e) {
    fail(ErrorKind::Data, "invalid " + context + ": " + e.what());
  }
  return c;
}

} // namespace json_io

namespace model {
namespace {

constexpr const char *kFormatTag = "bpnet-checkpoint";

[[noreturn]] void incompatible(const std::string &why) {
  fail(ErrorKind::Data, "incompatible checkpoint: " + why);
}

} // namespace

std::string checkpoint_to_string(const BPNetModel &model, const CheckpointMeta &meta) {
  using json_io::json;
  json params = json::array();
  for (const auto &p : model.parameters()) {
    const auto &shape = p.var->value.shape();
    const auto values = p.var->value.values();
    params.push_back({{"name", p.name},
                      {"shape", {shape[0], shape[1], shape[2]}},
                      {"values", std::vector<double>(values.begin(), values.end())}});
  }
  json doc{{"format", kFormatTag},
           {"format_version", kCheckpointVersion},
           {"config", json_io::to_json(model.config())},
           {"meta",
            {{"epochs_completed", meta.epochs_completed},
             {"window_len", meta.window_len},
             {"sample_rate_hz", meta.sample_rate_hz}}},
           {"parameters", std::move(params)}};
  return doc.dump(1) + "\n";
}

BPNetModel checkpoint_from_string(const std::string &text, CheckpointMeta *meta) {
  using json_io::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    incompatible(std::string("malformed document (") + e.what() + ")");
  }
  if (!doc.is_object() || doc.value("format", std::string()) != kFormatTag)
    incompatible("missing format tag");
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer())
    incompatible("missing format_version");
  const int version = doc["format_version"].get<int>();
  if (version != kCheckpointVersion)
    incompatible("unsupported format_version " + std::to_string(version) +
                 " (expected " + std::to_string(kCheckpointVersion) + ")");
  if (!doc.contains("config") || !doc.contains("parameters") || !doc["parameters"].is_array())
    incompatible("missing config or parameters");

  BPNetModel model(json_io::model_config_from_json(doc["config"], "config"));

  std::map<std::string, const json *> stored;
  for (const auto &entry : doc["parameters"]) {
    if (!entry.contains("name") || !entry["name"].is_string())
      incompatible("parameter without name");
    stored[entry["name"].get<std::string>()] = &entry;
  }
  const auto params = model.parameters();
  if (stored.size() != params.size())
    incompatible("expected " + std::to_string(params.size()) + " parameter tensors, found " +
                 std::to_string(stored.size()));
  for (const auto &p : params) {
    const auto it = stored.find(p.name);
    if (it == stored.end())
      incompatible("parameter '" + p.name + "' missing");
    const json &entry = *it->second;
    std::vector<std::size_t> shape;
    std::vector<double> values;
    try {
      shape = entry.at("shape").get<std::vector<std::size_t>>();
      values = entry.at("values").get<std::vector<double>>();
    } catch (const json::exception &) {
      incompatible("parameter '" + p.name + "' is malformed");
    }
    const auto &expected = p.var->value.shape();
    if (shape != std::vector<std::size_t>{expected[0], expected[1], expected[2]} ||
        values.size() != p.var->value.size())
      incompatible("parameter '" + p.name + "' has shape that does not match the config");
    std::copy(values.begin(), values.end(), p.var->value.data());
  }

  if (meta) {
    *meta = CheckpointMeta{};
    if (doc.contains("meta") && doc["meta"].is_object()) {
      const auto &m = doc["meta"];
      meta->epochs_completed = m.value("epochs_completed", std::size_t{0});
      meta->window_len = m.value("window_len", std::size_t{0});
      meta->sample_rate_hz = m.value("sample_rate_hz", 125.0);
    }
  }
  return model;
}

void save_checkpoint(const BPNetModel &model, const std::filesystem::path &path,
                     const CheckpointMeta &meta) {
  const std::string text = checkpoint_to_string(model, meta);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
      fail(ErrorKind::Io, "cannot write checkpoint '" + path.string() + "'");
    out << text;
    if (!out)
      fail(ErrorKind::Io, "short write to '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    fail(ErrorKind::Io, "cannot write checkpoint '" + path.string() + "': " + ec.message());
}

BPNetModel load_checkpoint(const std::filesystem::path &path, CheckpointMeta *meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::Io, "cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_string(buffer.str(), meta);
}

} // namespace model
} // namespace bpnet
