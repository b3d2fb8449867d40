#include "agcnn/synthetic.hpp"

#include <array>

#include "agcnn/rng.hpp"

namespace agcnn {

namespace {

const std::array<const char*, 40> kFiller = {
    "the",    "a",       "this",   "that",   "movie",  "film",   "plot",
    "story",  "acting",  "scene",  "camera", "music",  "pacing", "script",
    "cast",   "ending",  "start",  "was",    "is",     "felt",   "seemed",
    "looked", "very",    "quite",  "rather", "mostly", "fairly", "overall",
    "again",  "still",   "from",   "with",   "about",  "while",  "during",
    "early",  "late",    "really", "almost", "nearly"};

const std::array<const char*, 6> kKeywords = {"good",  "great", "superb",
                                              "fine",  "solid", "charming"};

const std::array<const char*, 2> kNegators = {"not", "never"};

std::string pick(Rng& rng, const auto& pool) {
  return pool[rng.next_below(pool.size())];
}

std::vector<std::string> filler_sentence(Rng& rng, size_t len) {
  std::vector<std::string> tokens;
  tokens.reserve(len);
  for (size_t i = 0; i < len; ++i) tokens.push_back(pick(rng, kFiller));
  return tokens;
}

// Overwrites tokens[pos] with a keyword, making sure the predecessor is
// not a negator.
void place_bare_keyword(Rng& rng, std::vector<std::string>& tokens,
                        size_t pos) {
  tokens[pos] = pick(rng, kKeywords);
  if (pos > 0 && (tokens[pos - 1] == "not" || tokens[pos - 1] == "never"))
    tokens[pos - 1] = pick(rng, kFiller);
}

// Overwrites tokens[pos-1..pos] with a "negator keyword" bigram.
void place_negated_keyword(Rng& rng, std::vector<std::string>& tokens,
                           size_t pos) {
  tokens[pos - 1] = pick(rng, kNegators);
  tokens[pos] = pick(rng, kKeywords);
}

// A stray negator followed by filler; present in both classes so negator
// presence alone carries no label signal.
void place_stray_negator(Rng& rng, std::vector<std::string>& tokens,
                         size_t pos) {
  tokens[pos] = pick(rng, kNegators);
  if (pos + 1 < tokens.size()) tokens[pos + 1] = pick(rng, kFiller);
}

}  // namespace

LabeledCorpus make_negation_corpus(size_t n, uint64_t seed, size_t max_len) {
  Rng rng(derive_seed(seed, 0x5E17u));
  std::vector<LabeledExample> examples;
  examples.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t len = 4 + rng.next_below(max_len - 3);  // 4..max_len
    auto tokens = filler_sentence(rng, len);
    const uint64_t kind = i % 4;

    if (kind < 2) {
      // positive: at least one keyword with a non-negator predecessor;
      // half also carry a stray negator so "not" alone is no signal
      size_t kw_min = 1;
      if (rng.next_double() < 0.5 && len >= 6) {
        const size_t neg_pos = rng.next_below(2);
        place_stray_negator(rng, tokens, neg_pos);
        kw_min = neg_pos + 2;  // keep the keyword clear of the negator
      }
      place_bare_keyword(rng, tokens, kw_min + rng.next_below(len - kw_min));
      examples.push_back({1, std::move(tokens)});
    } else if (kind == 2) {
      // negative: keyword mentions exist but every one is negated
      place_negated_keyword(rng, tokens, 1 + rng.next_below(len - 1));
      examples.push_back({0, std::move(tokens)});
    } else {
      // negative: no keyword at all, possibly a stray negator
      if (rng.next_double() < 0.5)
        place_stray_negator(rng, tokens, rng.next_below(len - 1));
      examples.push_back({0, std::move(tokens)});
    }
  }
  return make_corpus("synthetic_negation", std::move(examples));
}

LabeledCorpus make_keyword_corpus(size_t n, uint64_t seed, size_t max_len) {
  Rng rng(derive_seed(seed, 0x5E18u));
  std::vector<LabeledExample> examples;
  examples.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t len = 4 + rng.next_below(max_len - 3);
    auto tokens = filler_sentence(rng, len);
    if (i % 2 == 0) {
      tokens[rng.next_below(len)] = pick(rng, kKeywords);
      examples.push_back({1, std::move(tokens)});
    } else {
      examples.push_back({0, std::move(tokens)});
    }
  }
  return make_corpus("synthetic_keyword", std::move(examples));
}

}  // namespace agcnn
