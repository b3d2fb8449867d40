#pragma once

#include <cstdint>

#include "agcnn/corpus.hpp"

namespace agcnn {

// Two-class corpus where the label depends on keyword presence with a
// negation pattern: a sentence is positive iff it contains a sentiment
// keyword that is not immediately preceded by a negator, so bigram
// context is required to classify the negated mentions.
LabeledCorpus make_negation_corpus(size_t n, uint64_t seed,
                                   size_t max_len = 12);

// Simpler variant: the label is pure keyword presence (unigram evidence).
LabeledCorpus make_keyword_corpus(size_t n, uint64_t seed,
                                  size_t max_len = 12);

}  // namespace agcnn
