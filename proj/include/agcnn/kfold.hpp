#pragma once

#include <cstdint>
#include <vector>

#include "agcnn/corpus.hpp"

namespace agcnn {

// Deterministic stratified k-fold partition: per-class shuffle with the
// seed, then round-robin assignment, so per-fold label counts differ from
// the ideal proportion by at most 1 per label.
struct FoldPlan {
  int k = 0;
  uint64_t seed = 0;
  std::vector<int> assignments;  // fold index per example

  std::vector<size_t> fold_indices(int fold) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(i);
    return out;
  }

  std::vector<size_t> complement_indices(int fold) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(i);
    return out;
  }
};

FoldPlan kfold_plan(const LabeledCorpus& corpus, int k, uint64_t seed,
                    bool stratified = true);

}  // namespace agcnn
