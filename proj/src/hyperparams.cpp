#include "agcnn/hyperparams.hpp"

#include <algorithm>
#include <sstream>

#include "agcnn/error.hpp"

namespace agcnn {

namespace {

void validate_windows(const std::vector<size_t>& windows, const char* which) {
  if (windows.empty())
    throw Error(ErrorKind::config, std::string(which) + " must be non-empty");
  for (size_t i = 0; i < windows.size(); ++i) {
    if (windows[i] < 1)
      throw Error(ErrorKind::config, std::string(which) + " sizes must be >= 1");
    if (i > 0 && windows[i] <= windows[i - 1])
      throw Error(ErrorKind::config,
                  std::string(which) + " must be strictly increasing");
  }
}

std::vector<size_t> parse_window_list(const std::string& value) {
  std::vector<size_t> out;
  std::string item;
  std::istringstream iss(value);
  while (std::getline(iss, item, ',')) {
    if (item.empty()) continue;
    try {
      size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::config, "bad window size: '" + item + "'");
    }
  }
  return out;
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, "bad value for " + key + ": '" + value + "'");
  }
}

uint64_t parse_u64(const std::string& value, const std::string& key) {
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, "bad value for " + key + ": '" + value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorKind::config, "bad value for " + key + ": '" + value + "'");
}

}  // namespace

size_t HyperParams::max_window() const {
  return *std::max_element(conv_windows.begin(), conv_windows.end());
}

void HyperParams::validate() const {
  validate_windows(conv_windows, "conv_windows");
  validate_windows(attn_windows, "attn_windows");
  if (n_maps_conv < 1)
    throw Error(ErrorKind::config, "n_maps_conv must be >= 1");
  if (n_maps_attn < 1)
    throw Error(ErrorKind::config, "n_maps_attn must be >= 1");
  if (!(keep_rate > 0.0 && keep_rate <= 1.0))
    throw Error(ErrorKind::config, "keep_rate must be in (0, 1]");
  if (classes < 2)
    throw Error(ErrorKind::config, "classes must be >= 2");
  if (embedding_dim < 1)
    throw Error(ErrorKind::config, "embedding_dim must be >= 1");
  if (learning_rate < 0.0)
    throw Error(ErrorKind::config, "learning_rate must be >= 0");
  if (batch_size < 1)
    throw Error(ErrorKind::config, "batch_size must be >= 1");
  if (max_norm < 0.0)
    throw Error(ErrorKind::config, "max_norm must be >= 0");
  if (nlrelu_beta <= 0.0)
    throw Error(ErrorKind::config, "nlrelu_beta must be > 0");
}

const char* embedding_mode_name(EmbeddingMode mode) {
  return mode == EmbeddingMode::rand ? "rand" : "static";
}

EmbeddingMode parse_embedding_mode(const std::string& name) {
  if (name == "rand") return EmbeddingMode::rand;
  if (name == "static") return EmbeddingMode::static_pretrained;
  throw Error(ErrorKind::config, "unknown embedding_mode: " + name);
}

const char* init_scheme_name(InitScheme scheme) {
  return scheme == InitScheme::agcnn ? "agcnn" : "legacy_cnn";
}

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "agcnn") return InitScheme::agcnn;
  if (name == "legacy_cnn") return InitScheme::legacy_cnn;
  throw Error(ErrorKind::config, "unknown init_scheme: " + name);
}

nlohmann::json hyperparams_to_json(const HyperParams& hp) {
  return nlohmann::json{
      {"conv_windows", hp.conv_windows},
      {"n_maps_conv", hp.n_maps_conv},
      {"attn_windows", hp.attn_windows},
      {"n_maps_attn", hp.n_maps_attn},
      {"keep_rate", hp.keep_rate},
      {"activation", activation_name(hp.activation)},
      {"gate_activation", activation_name(hp.gate_activation)},
      {"embedding_mode", embedding_mode_name(hp.embedding_mode)},
      {"embedding_dim", hp.embedding_dim},
      {"classes", hp.classes},
      {"learning_rate", hp.learning_rate},
      {"batch_size", hp.batch_size},
      {"epochs", hp.epochs},
      {"seed", hp.seed},
      {"use_attention", hp.use_attention},
      {"init_scheme", init_scheme_name(hp.init_scheme)},
      {"max_norm", hp.max_norm},
      {"lrelu_slope", hp.lrelu_slope},
      {"nlrelu_beta", hp.nlrelu_beta},
      {"prelu_init", hp.prelu_init},
  };
}

HyperParams hyperparams_from_json(const nlohmann::json& j) {
  HyperParams hp;
  try {
    if (j.contains("conv_windows"))
      hp.conv_windows = j.at("conv_windows").get<std::vector<size_t>>();
    if (j.contains("n_maps_conv")) hp.n_maps_conv = j.at("n_maps_conv");
    if (j.contains("attn_windows"))
      hp.attn_windows = j.at("attn_windows").get<std::vector<size_t>>();
    if (j.contains("n_maps_attn")) hp.n_maps_attn = j.at("n_maps_attn");
    if (j.contains("keep_rate")) hp.keep_rate = j.at("keep_rate");
    if (j.contains("activation"))
      hp.activation = parse_activation(j.at("activation"));
    hp.gate_activation = hp.activation;
    if (j.contains("gate_activation"))
      hp.gate_activation = parse_activation(j.at("gate_activation"));
    if (j.contains("embedding_mode"))
      hp.embedding_mode = parse_embedding_mode(j.at("embedding_mode"));
    if (j.contains("embedding_dim")) hp.embedding_dim = j.at("embedding_dim");
    if (j.contains("classes")) hp.classes = j.at("classes");
    if (j.contains("learning_rate")) hp.learning_rate = j.at("learning_rate");
    if (j.contains("batch_size")) hp.batch_size = j.at("batch_size");
    if (j.contains("epochs")) hp.epochs = j.at("epochs");
    if (j.contains("seed")) hp.seed = j.at("seed");
    if (j.contains("use_attention")) hp.use_attention = j.at("use_attention");
    if (j.contains("init_scheme"))
      hp.init_scheme = parse_init_scheme(j.at("init_scheme"));
    if (j.contains("max_norm")) hp.max_norm = j.at("max_norm");
    if (j.contains("lrelu_slope")) hp.lrelu_slope = j.at("lrelu_slope");
    if (j.contains("nlrelu_beta")) hp.nlrelu_beta = j.at("nlrelu_beta");
    if (j.contains("prelu_init")) hp.prelu_init = j.at("prelu_init");
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad hyperparams json: ") + e.what());
  }
  hp.validate();
  return hp;
}

void apply_override(HyperParams& hp, const std::string& key,
                    const std::string& value) {
  if (key == "conv_windows") hp.conv_windows = parse_window_list(value);
  else if (key == "n_maps_conv") hp.n_maps_conv = parse_u64(value, key);
  else if (key == "attn_windows") hp.attn_windows = parse_window_list(value);
  else if (key == "n_maps_attn") hp.n_maps_attn = parse_u64(value, key);
  else if (key == "keep_rate") hp.keep_rate = parse_double(value, key);
  else if (key == "activation") {
    hp.activation = parse_activation(value);
    hp.gate_activation = hp.activation;
  }
  else if (key == "gate_activation") hp.gate_activation = parse_activation(value);
  else if (key == "embedding_mode") hp.embedding_mode = parse_embedding_mode(value);
  else if (key == "embedding_dim") hp.embedding_dim = parse_u64(value, key);
  else if (key == "classes") hp.classes = static_cast<int>(parse_u64(value, key));
  else if (key == "learning_rate") hp.learning_rate = parse_double(value, key);
  else if (key == "batch_size") hp.batch_size = parse_u64(value, key);
  else if (key == "epochs") hp.epochs = parse_u64(value, key);
  else if (key == "seed") hp.seed = parse_u64(value, key);
  else if (key == "use_attention") hp.use_attention = parse_bool(value, key);
  else if (key == "init_scheme") hp.init_scheme = parse_init_scheme(value);
  else if (key == "max_norm") hp.max_norm = parse_double(value, key);
  else if (key == "lrelu_slope") hp.lrelu_slope = parse_double(value, key);
  else if (key == "nlrelu_beta") hp.nlrelu_beta = parse_double(value, key);
  else if (key == "prelu_init") hp.prelu_init = parse_double(value, key);
  else
    throw Error(ErrorKind::config, "unknown config key: " + key);
}

}  // namespace agcnn
