#pragma once

#include <string>
#include <vector>

namespace agcnn {

// Normalizes raw text, in order: detach contractions ('s 've n't 're 'd
// 'll become separate tokens), space out , ! ? ( ) ", collapse whitespace
// runs, trim, and lowercase unless preserve_case. Idempotent.
std::string clean_text(const std::string& raw, bool preserve_case = false);

// Splits on single spaces; assumes clean_text-normalized input.
std::vector<std::string> tokenize(const std::string& cleaned);

}  // namespace agcnn
