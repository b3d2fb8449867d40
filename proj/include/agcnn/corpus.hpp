#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace agcnn {

struct LabeledExample {
  int label = 0;
  std::vector<std::string> tokens;
};

struct LabeledCorpus {
  std::string name;
  int class_count = 0;
  std::vector<LabeledExample> examples;
};

// Token ids; index 0 is the reserved padding token and never appears in
// the token->index map.
struct Vocabulary {
  std::unordered_map<std::string, int> index;
  std::vector<std::string> tokens;  // tokens[i] is the word at index i+1
  uint64_t content_hash = 0;        // digest of the full corpus token stream

  int size_with_padding() const { return static_cast<int>(tokens.size()) + 1; }

  // 0 (padding) when the token is unknown
  int id_of(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? 0 : it->second;
  }
};

struct EncodedExample {
  int label = 0;
  std::vector<int> token_ids;
};

// Canonical dataset format: UTF-8 lines "LABEL<TAB>TEXT", LABEL a base-10
// integer. Labels must be dense in [0, c). Text is cleaned and tokenized.
LabeledCorpus load_corpus(const std::string& path, bool preserve_case = false);

// Builds a corpus from already-tokenized examples; validates labels.
LabeledCorpus make_corpus(std::string name,
                          std::vector<LabeledExample> examples);

// Every distinct token gets an index >= 1 in first-occurrence order.
Vocabulary build_vocab(const LabeledCorpus& corpus);

std::vector<EncodedExample> encode(const LabeledCorpus& corpus,
                                   const Vocabulary& vocab);

}  // namespace agcnn
