#pragma once

#include <string>

#include "agcnn/model.hpp"

namespace agcnn {

// Checkpoint file layout: magic "AGCN", u32 version, u64 metadata length,
// UTF-8 JSON metadata (hyperparams, tensor manifest of names/shapes/
// offsets, vocabulary hash), then little-endian float32 tensor payload in
// manifest order. Written atomically (temp file + rename).
constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointLoad {
  AgcnnModel model;
  uint64_t vocab_hash = 0;

  bool vocab_matches(uint64_t corpus_hash) const {
    return vocab_hash == corpus_hash;
  }
};

void save_checkpoint(const AgcnnModel& model, const std::string& path);

CheckpointLoad load_checkpoint(const std::string& path);

}  // namespace agcnn
