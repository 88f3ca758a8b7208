// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seq2graph/error.hpp"

namespace seq2graph::model {

using nlohmann::ordered_json;

namespace {

ordered_json config_json(const ModelConfig& c) {
  return ordered_json{{"series", c.series},
                      {"window", c.window},
                      {"enc_hidden", c.enc_hidden},
                      {"dp_hidden", c.dp_hidden},
                      {"dec_hidden", c.dec_hidden},
                      {"v_dim", c.v_dim},
                      {"feat_dim", c.feat_dim},
                      {"temporal_score_hidden", c.temporal_score_hidden},
                      {"inter_score_hidden", c.inter_score_hidden},
                      {"share_temporal_attention", c.share_temporal_attention},
                      {"seed", c.seed}};
}

ModelConfig config_from(const ordered_json& j) {
  ModelConfig c;
  c.series = j.at("series").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.enc_hidden = j.at("enc_hidden").get<std::size_t>();
  c.dp_hidden = j.at("dp_hidden").get<std::size_t>();
  c.dec_hidden = j.at("dec_hidden").get<std::size_t>();
  c.v_dim = j.at("v_dim").get<std::size_t>();
  c.feat_dim = j.at("feat_dim").get<std::size_t>();
  c.temporal_score_hidden = j.at("temporal_score_hidden").get<std::size_t>();
  c.inter_score_hidden = j.at("inter_score_hidden").get<std::size_t>();
  c.share_temporal_attention = j.at("share_temporal_attention").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  ordered_json doc;
  doc["format"] = "seq2graph-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["config"] = config_json(checkpoint.model.config);
  doc["series_names"] = checkpoint.series_names;
  doc["scaler"] = ordered_json{{"min", checkpoint.scaler.min},
                               {"max", checkpoint.scaler.max},
                               {"constant", checkpoint.scaler.constant}};
  ordered_json tensors = ordered_json::object();
  checkpoint.model.params.visit([&](const std::string& name, const Tensor& t) {
    std::vector<std::size_t> dims;
    for (std::size_t k = 0; k < t.shape().rank(); ++k) dims.push_back(t.shape()[k]);
    std::vector<double> values(t.values().begin(), t.values().end());
    tensors[name] = ordered_json{{"shape", dims}, {"values", values}};
  });
  doc["parameters"] = std::move(tensors);
  return doc.dump() + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  try {
    const auto doc = ordered_json::parse(text);
    if (doc.value("format", std::string()) != "seq2graph-checkpoint") {
      throw SchemaError("not a checkpoint document");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw SchemaError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint cp;
    cp.model.config = config_from(doc.at("config"));
    cp.series_names = doc.at("series_names").get<std::vector<std::string>>();
    if (cp.series_names.size() != cp.model.config.series) {
      throw SchemaError("checkpoint lists " + std::to_string(cp.series_names.size()) +
                        " series names for a " + std::to_string(cp.model.config.series) +
                        "-series model");
    }
    const auto& sc = doc.at("scaler");
    cp.scaler.min = sc.at("min").get<std::vector<double>>();
    cp.scaler.max = sc.at("max").get<std::vector<double>>();
    cp.scaler.constant = sc.at("constant").get<std::vector<bool>>();
    if (cp.scaler.min.size() != cp.model.config.series ||
        cp.scaler.max.size() != cp.model.config.series ||
        cp.scaler.constant.size() != cp.model.config.series) {
      throw SchemaError("scaler width differs from the series count");
    }

    cp.model.params = init_params(cp.model.config);
    const auto& tensors = doc.at("parameters");
    std::size_t seen = 0;
    cp.model.params.visit([&](const std::string& name, Tensor& t) {
      if (!tensors.contains(name)) throw SchemaError("checkpoint is missing tensor '" + name + "'");
      const auto& entry = tensors.at(name);
      const auto dims = entry.at("shape").get<std::vector<std::size_t>>();
      bool same = dims.size() == t.shape().rank();
      for (std::size_t k = 0; same && k < dims.size(); ++k) same = dims[k] == t.shape()[k];
      if (!same) {
        throw SchemaError("tensor '" + name + "' has the wrong shape; config expects " +
                          t.shape().str());
      }
      auto values = entry.at("values").get<std::vector<double>>();
      if (values.size() != t.size()) {
        throw SchemaError("tensor '" + name + "' holds " + std::to_string(values.size()) +
                          " values, expected " + std::to_string(t.size()));
      }
      t = Tensor(t.shape(), std::move(values));
      ++seen;
    });
    if (seen != tensors.size()) throw SchemaError("checkpoint has tensors the config does not use");
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << checkpoint_to_json(checkpoint);
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace seq2graph::model
