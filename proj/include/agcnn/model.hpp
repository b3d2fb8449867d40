#pragma once

#include <span>
#include <string>
#include <vector>

#include "agcnn/corpus.hpp"
#include "agcnn/hyperparams.hpp"
#include "agcnn/ops.hpp"
#include "agcnn/rng.hpp"
#include "agcnn/tensor.hpp"

namespace agcnn {

// One first-layer bank: n_maps_conv kernels of shape [h x d] with biases.
struct ConvBank {
  size_t window = 0;
  std::vector<TensorPtr> kernels;
  std::vector<TensorPtr> biases;
};

// One attention bank: n_maps_attn kernels of shape [w] with biases,
// shared across every first-layer feature map.
struct AttnBank {
  size_t window = 0;
  std::vector<TensorPtr> kernels;
  std::vector<TensorPtr> biases;
};

struct NamedParam {
  std::string name;
  TensorPtr tensor;
};

struct AgcnnModel {
  HyperParams hp;
  size_t vocab_size = 0;
  uint64_t vocab_hash = 0;

  TensorPtr embedding;  // [V x d], row 0 is the all-zero padding row
  std::vector<ConvBank> conv_banks;
  std::vector<AttnBank> attn_banks;
  TensorPtr dense_w;  // [c x m], m = |conv_windows| * n_maps_conv
  TensorPtr dense_b;  // [c]
  TensorPtr prelu_slope;

  Rng rng{0};

  // Stable manifest order: embedding, conv kernels/biases by (window, map),
  // attention kernels/biases by (window, map), dense, prelu slope.
  std::vector<NamedParam> named_params() const;
  std::vector<TensorPtr> trainable_params() const;
};

// Kernels and dense weights uniform in [-0.05, 0.05] (agcnn scheme) or
// [-0.01, 0.01] (legacy_cnn scheme); biases zero; rand-mode embeddings
// uniform [-0.25, 0.25]; static-mode embeddings start zero, are installed
// via install_embeddings, and never receive gradients. Fully determined
// by (hp, vocab_size, seed).
AgcnnModel init_params(const HyperParams& hp, size_t vocab_size,
                       uint64_t seed);

// Installs a pre-trained [V x d] matrix; keeps row 0 zero.
void install_embeddings(AgcnnModel& model, const TensorPtr& matrix);

// Gate construction for one activated feature map: every attention kernel
// produces a same-length weight map, weight maps pass through the gate
// activation and average elementwise into one gate, which multiplies the
// feature map.
TensorPtr attention_gate(Tape& tape, const AgcnnModel& model,
                         const TensorPtr& featmap);

// Class probabilities for one (padded) sentence. L must be >= the largest
// first-layer window.
TensorPtr forward(Tape& tape, AgcnnModel& model, std::span<const int> token_ids,
                  bool training, Rng& rng);
TensorPtr forward_logits(Tape& tape, AgcnnModel& model,
                         std::span<const int> token_ids, bool training,
                         Rng& rng);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// Forward in training mode over the batch, mean cross-entropy, backward,
// one Adam update. Returns the mean batch loss; throws ErrorKind::divergence
// when the loss is not finite.
double train_step(AgcnnModel& model, std::span<const EncodedExample> batch,
                  AdamState& adam);

struct EpochStats {
  size_t epoch = 0;
  double mean_loss = 0.0;
  double wall_seconds = 0.0;
};

// Epoch loop: shuffle, batch, train_step. Deterministic in (model state,
// data order).
std::vector<EpochStats> train(AgcnnModel& model,
                              std::span<const EncodedExample> examples,
                              size_t epochs = 0 /* 0: hp.epochs */);

// Fraction of examples whose argmax probability equals the label; dropout
// in inference mode; argmax ties break toward the lowest class index.
double evaluate(AgcnnModel& model, std::span<const EncodedExample> slice);

// Right-pads with the 0 token to max(len, min_len).
std::vector<int> pad_tokens(std::span<const int> ids, size_t min_len);

}  // namespace agcnn
