#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agcnn/activations.hpp"

#include "json.hpp"

namespace agcnn {

enum class EmbeddingMode { rand, static_pretrained };

enum class InitScheme { agcnn, legacy_cnn };

// Every configuration axis of the model and its training loop. Defaults
// are the single-window baseline; see presets in sweep.hpp.
struct HyperParams {
  std::vector<size_t> conv_windows{3};  // first-layer window sizes
  size_t n_maps_conv = 100;             // feature maps per first-layer window
  std::vector<size_t> attn_windows{3};  // attention-layer window sizes
  size_t n_maps_attn = 1;               // attention kernels per window size
  double keep_rate = 0.5;
  ActivationKind activation = ActivationKind::nlrelu;
  ActivationKind gate_activation = ActivationKind::nlrelu;
  EmbeddingMode embedding_mode = EmbeddingMode::rand;
  size_t embedding_dim = 128;
  int classes = 2;

  double learning_rate = 1e-3;  // Adam
  size_t batch_size = 50;
  size_t epochs = 25;
  uint64_t seed = 0;

  bool use_attention = true;       // off for the plain-CNN ablation rungs
  InitScheme init_scheme = InitScheme::agcnn;
  double max_norm = 0.0;           // >0 caps dense weight row norms
  double lrelu_slope = kDefaultLReluSlope;
  double nlrelu_beta = kDefaultNLReluBeta;
  double prelu_init = kDefaultPReluInit;

  size_t max_window() const;
  size_t pooled_dim() const { return conv_windows.size() * n_maps_conv; }

  Activation activation_config() const {
    return {activation, lrelu_slope, nlrelu_beta};
  }
  Activation gate_activation_config() const {
    return {gate_activation, lrelu_slope, nlrelu_beta};
  }

  // Throws ErrorKind::config on any invariant violation.
  void validate() const;
};

const char* embedding_mode_name(EmbeddingMode mode);
EmbeddingMode parse_embedding_mode(const std::string& name);
const char* init_scheme_name(InitScheme scheme);
InitScheme parse_init_scheme(const std::string& name);

nlohmann::json hyperparams_to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const nlohmann::json& j);

// Applies a dotted "--set key=value" override; throws ErrorKind::config
// for unknown keys or unparsable values.
void apply_override(HyperParams& hp, const std::string& key,
                    const std::string& value);

}  // namespace agcnn
