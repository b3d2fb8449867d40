#pragma once

#include <span>
#include <vector>

#include "agcnn/activations.hpp"
#include "agcnn/rng.hpp"
#include "agcnn/tensor.hpp"

namespace agcnn {

// Differentiable operation set. Every op computes its forward value
// eagerly and records a backward closure on the tape when any input
// requires a gradient.

// Valid 1-D convolution of a token window over an [L x d] sequence:
// out[i] = bias + sum_{j<h,k<d} seq[i+j,k] * kernel[j,k], length L-h+1.
TensorPtr conv1d_valid(Tape& tape, const TensorPtr& seq,
                       const TensorPtr& kernel, const TensorPtr& bias);

// Same-length 1-D convolution over an [L] map with zero padding split
// padL = floor((w-1)/2), padR = ceil((w-1)/2). Odd w sees a symmetric
// context window, even w one extra element on the right.
TensorPtr conv1d_same_asym(Tape& tape, const TensorPtr& map,
                           const TensorPtr& kernel, const TensorPtr& bias);

// Max over positions; gradient flows to the first maximizing index.
TensorPtr max_over_time(Tape& tape, const TensorPtr& map);

// Elementwise activation. `prelu_slope` must be a scalar tensor when
// act.kind == prelu and is ignored otherwise.
TensorPtr activate(Tape& tape, const Activation& act, const TensorPtr& x,
                   const TensorPtr& prelu_slope = nullptr);

TensorPtr elementwise_mul(Tape& tape, const TensorPtr& a, const TensorPtr& b);

// out = W x + b with x [m], W [c x m], b [c].
TensorPtr dense(Tape& tape, const TensorPtr& x, const TensorPtr& W,
                const TensorPtr& b);

// Inverted dropout: each element kept with probability keep_rate and
// scaled by 1/keep_rate; identity in inference mode or when keep_rate == 1.
TensorPtr dropout(Tape& tape, const TensorPtr& x, double keep_rate, Rng& rng,
                  bool training);

// Cross-entropy of softmax(logits) against a class index, computed with
// max-subtraction stabilization; returns a scalar loss.
TensorPtr softmax_xent(Tape& tape, const TensorPtr& logits, size_t label);

// Softmax probabilities of a logit vector.
TensorPtr softmax(Tape& tape, const TensorPtr& logits);

// Embedding lookup: gathers rows of table [V x d] for each id, giving
// [L x d]. Gradients scatter-add into the looked-up rows.
TensorPtr lookup(Tape& tape, const TensorPtr& table, std::span<const int> ids);

// Elementwise mean of same-shape tensors.
TensorPtr mean_stack(Tape& tape, std::span<const TensorPtr> xs);

// Concatenation of 1-D tensors.
TensorPtr concat(Tape& tape, std::span<const TensorPtr> xs);

// Sum of all elements; returns a scalar.
TensorPtr sum(Tape& tape, const TensorPtr& x);

}  // namespace agcnn
