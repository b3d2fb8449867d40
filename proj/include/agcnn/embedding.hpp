#pragma once

#include <string>

#include "agcnn/corpus.hpp"
#include "agcnn/tensor.hpp"

namespace agcnn {

struct EmbeddingLoadResult {
  TensorPtr matrix;       // [V x d], row 0 all-zero padding row
  size_t covered = 0;     // vocabulary tokens found in the file
  size_t vocab_size = 0;  // tokens in the vocabulary (excluding padding)

  double coverage() const {
    return vocab_size == 0 ? 0.0
                           : static_cast<double>(covered) / vocab_size;
  }
};

// Reads a whitespace-separated text vector file: an optional "V d" header
// line, then "token v1 ... vd" lines. In-vocabulary rows are copied from
// the file; out-of-vocabulary rows are drawn uniform [-0.25, 0.25] from
// the seed; row 0 stays zero.
EmbeddingLoadResult load_pretrained(const std::string& path,
                                    const Vocabulary& vocab, size_t dim,
                                    uint64_t seed);

}  // namespace agcnn
