#include "agcnn/corpus.hpp"

#include <algorithm>
#include <fstream>

#include "agcnn/error.hpp"
#include "agcnn/rng.hpp"
#include "agcnn/text.hpp"

namespace agcnn {

namespace {

void validate_labels(LabeledCorpus& corpus) {
  if (corpus.examples.empty())
    throw Error(ErrorKind::data, corpus.name + ": corpus is empty");
  int max_label = 0;
  for (const auto& ex : corpus.examples) {
    if (ex.label < 0)
      throw Error(ErrorKind::data, corpus.name + ": negative label");
    if (ex.tokens.empty())
      throw Error(ErrorKind::data, corpus.name + ": example with no tokens");
    max_label = std::max(max_label, ex.label);
  }
  const int c = max_label + 1;
  if (c < 2)
    throw Error(ErrorKind::data, corpus.name + ": needs at least 2 classes");
  std::vector<int> counts(c, 0);
  for (const auto& ex : corpus.examples) ++counts[ex.label];
  for (int l = 0; l < c; ++l) {
    if (counts[l] == 0)
      throw Error(ErrorKind::data, corpus.name + ": label gap, class " +
                                       std::to_string(l) + " unused");
  }
  corpus.class_count = c;
}

}  // namespace

LabeledCorpus load_corpus(const std::string& path, bool preserve_case) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::io, "cannot open corpus file: " + path);

  LabeledCorpus corpus;
  corpus.name = path;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::data,
                  path + ":" + std::to_string(line_no) + ": missing tab separator");
    const std::string label_str = line.substr(0, tab);
    int label = 0;
    try {
      size_t used = 0;
      label = std::stoi(label_str, &used);
      if (used != label_str.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::data, path + ":" + std::to_string(line_no) +
                                       ": label is not an integer: '" +
                                       label_str + "'");
    }
    LabeledExample ex;
    ex.label = label;
    ex.tokens = tokenize(clean_text(line.substr(tab + 1), preserve_case));
    if (ex.tokens.empty()) continue;  // cleaning may empty a line; drop it
    corpus.examples.push_back(std::move(ex));
  }
  validate_labels(corpus);
  return corpus;
}

LabeledCorpus make_corpus(std::string name,
                          std::vector<LabeledExample> examples) {
  LabeledCorpus corpus;
  corpus.name = std::move(name);
  corpus.examples = std::move(examples);
  validate_labels(corpus);
  return corpus;
}

Vocabulary build_vocab(const LabeledCorpus& corpus) {
  if (corpus.examples.empty())
    throw Error(ErrorKind::data, "cannot build vocabulary from empty corpus");
  Vocabulary vocab;
  Fnv1a hash;
  for (const auto& ex : corpus.examples) {
    hash.update_u64(static_cast<uint64_t>(ex.label));
    for (const auto& tok : ex.tokens) {
      if (tok.empty()) continue;
      hash.update(tok.data(), tok.size());
      hash.update_u64(0x1F);  // token separator
      if (!vocab.index.count(tok)) {
        vocab.tokens.push_back(tok);
        vocab.index.emplace(tok, static_cast<int>(vocab.tokens.size()));
      }
    }
  }
  vocab.content_hash = hash.digest();
  return vocab;
}

std::vector<EncodedExample> encode(const LabeledCorpus& corpus,
                                   const Vocabulary& vocab) {
  std::vector<EncodedExample> out;
  out.reserve(corpus.examples.size());
  for (const auto& ex : corpus.examples) {
    EncodedExample e;
    e.label = ex.label;
    e.token_ids.reserve(ex.tokens.size());
    for (const auto& tok : ex.tokens) e.token_ids.push_back(vocab.id_of(tok));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace agcnn
