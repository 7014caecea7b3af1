#include "scfnet/model_config.hpp"

#include <nlohmann/json.hpp>

namespace scfnet {

using nlohmann::json;

std::string arch_name(Arch arch) {
  return arch == Arch::Scfnet ? "scfnet" : "end2end";
}

Arch arch_from_name(const std::string& name) {
  if (name == "scfnet") return Arch::Scfnet;
  if (name == "end2end") return Arch::End2End;
  throw ValidationError("unknown architecture '" + name + "' (expected scfnet or end2end)");
}

void ModelConfig::validate() const {
  if (n_channels < 1) throw ValidationError("model: n_channels must be >= 1");
  if (n_classes < 2) throw ValidationError("model: n_classes must be >= 2");
  if (window_samples < 1) throw ValidationError("model: window_samples must be >= 1");
  if (feature_width < 4 || feature_width % 4 != 0)
    throw ValidationError("model: feature_width must be a positive multiple of 4");
  if (inception_kernels.size() != 4) throw ValidationError("model: expected 4 inception kernels");
  for (int k : inception_kernels)
    if (k < 1 || k % 2 == 0) throw ValidationError("model: inception kernels must be odd");
  if (n_resnet_blocks != static_cast<int>(resnet_stage_strides.size()))
    throw ValidationError("model: resnet_stage_strides length must equal n_resnet_blocks");
  for (int s : resnet_stage_strides)
    if (s != 1 && s != 2) throw ValidationError("model: block strides must be 1 or 2");
  if (lstm_hidden != feature_width)
    throw ValidationError("model: lstm_hidden must equal feature_width");
  if (classifier_hidden < 1) throw ValidationError("model: classifier_hidden must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("model: dropout must be in [0, 1)");
  if (window_samples % total_downsampling() != 0)
    throw ValidationError("model: window_samples must be divisible by the total temporal downsampling (" +
                          std::to_string(total_downsampling()) + ")");
}

namespace {

json config_json(const ModelConfig& cfg) {
  json j;
  j["arch"] = arch_name(cfg.arch);
  j["n_channels"] = cfg.n_channels;
  j["window_samples"] = cfg.window_samples;
  j["feature_width"] = cfg.feature_width;
  j["inception_kernels"] = cfg.inception_kernels;
  j["n_resnet_blocks"] = cfg.n_resnet_blocks;
  j["resnet_stage_strides"] = cfg.resnet_stage_strides;
  j["lstm_hidden"] = cfg.lstm_hidden;
  j["classifier_hidden"] = cfg.classifier_hidden;
  j["n_classes"] = cfg.n_classes;
  j["dropout"] = cfg.dropout;
  return j;
}

}  // namespace

std::string config_fingerprint(const ModelConfig& cfg) {
  return config_json(cfg).dump();  // nlohmann objects are key-sorted, so this is canonical
}

std::string extractor_fingerprint(const ModelConfig& cfg) {
  json j;
  j["arch"] = arch_name(cfg.arch);
  j["feature_width"] = cfg.feature_width;
  j["inception_kernels"] = cfg.inception_kernels;
  j["n_resnet_blocks"] = cfg.n_resnet_blocks;
  j["resnet_stage_strides"] = cfg.resnet_stage_strides;
  j["lstm_hidden"] = cfg.lstm_hidden;
  return j.dump();
}

ModelConfig config_from_fingerprint(const std::string& json_text) {
  json j = json::parse(json_text);
  ModelConfig cfg;
  cfg.arch = arch_from_name(j.at("arch").get<std::string>());
  cfg.n_channels = j.at("n_channels").get<int>();
  cfg.window_samples = j.at("window_samples").get<int>();
  cfg.feature_width = j.at("feature_width").get<int>();
  cfg.inception_kernels = j.at("inception_kernels").get<std::vector<int>>();
  cfg.n_resnet_blocks = j.at("n_resnet_blocks").get<int>();
  cfg.resnet_stage_strides = j.at("resnet_stage_strides").get<std::vector<int>>();
  cfg.lstm_hidden = j.at("lstm_hidden").get<int>();
  cfg.classifier_hidden = j.at("classifier_hidden").get<int>();
  cfg.n_classes = j.at("n_classes").get<int>();
  cfg.dropout = j.at("dropout").get<double>();
  return cfg;
}

}  // namespace scfnet
