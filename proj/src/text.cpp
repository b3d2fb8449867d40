#include "agcnn/text.hpp"

#include <cctype>

namespace agcnn {

namespace {

bool matches_at(const std::string& s, size_t pos, const std::string& pat) {
  if (pos + pat.size() > s.size()) return false;
  for (size_t i = 0; i < pat.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != pat[i])
      return false;
  }
  return true;
}

// Contraction suffixes detached as their own tokens, matched
// case-insensitively, longest first so 've wins over 'e-style prefixes.
const char* kContractions[] = {"'ve", "n't", "'re", "'ll", "'s", "'d"};

const char* kSpacedPunct = ",!?()\"";

}  // namespace

std::string clean_text(const std::string& raw, bool preserve_case) {
  std::string out;
  out.reserve(raw.size() + raw.size() / 4);

  size_t i = 0;
  while (i < raw.size()) {
    bool handled = false;
    for (const char* pat : kContractions) {
      if (matches_at(raw, i, pat)) {
        const size_t len = std::string(pat).size();
        out.push_back(' ');
        out.append(raw, i, len);
        i += len;
        handled = true;
        break;
      }
    }
    if (handled) continue;
    const char c = raw[i];
    if (std::string(kSpacedPunct).find(c) != std::string::npos) {
      out.push_back(' ');
      out.push_back(c);
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
    ++i;
  }

  // collapse whitespace runs to single spaces and trim
  std::string collapsed;
  collapsed.reserve(out.size());
  bool in_space = true;  // leading whitespace is dropped
  for (char c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) collapsed.push_back(' ');
      in_space = true;
    } else {
      collapsed.push_back(c);
      in_space = false;
    }
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();

  if (!preserve_case) {
    for (char& c : collapsed)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return collapsed;
}

std::vector<std::string> tokenize(const std::string& cleaned) {
  std::vector<std::string> tokens;
  size_t start = 0;
  while (start < cleaned.size()) {
    size_t end = cleaned.find(' ', start);
    if (end == std::string::npos) end = cleaned.size();
    if (end > start) tokens.push_back(cleaned.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

}  // namespace agcnn
