#include "agcnn/embedding.hpp"

#include <fstream>
#include <sstream>

#include "agcnn/error.hpp"
#include "agcnn/rng.hpp"

namespace agcnn {

EmbeddingLoadResult load_pretrained(const std::string& path,
                                    const Vocabulary& vocab, size_t dim,
                                    uint64_t seed) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::io, "cannot open vector file: " + path);
  if (dim < 1)
    throw Error(ErrorKind::config, "embedding dimension must be >= 1");

  const size_t V = static_cast<size_t>(vocab.size_with_padding());
  EmbeddingLoadResult result;
  result.vocab_size = vocab.tokens.size();
  result.matrix = make_tensor({V, dim});
  std::vector<bool> filled(V, false);

  std::string line;
  size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::istringstream iss(line);
    std::vector<std::string> fields;
    std::string field;
    while (iss >> field) fields.push_back(field);
    if (fields.empty()) continue;

    // optional header "V d"
    if (first_content_line && fields.size() == 2) {
      try {
        size_t used_a = 0, used_b = 0;
        (void)std::stoull(fields[0], &used_a);
        const size_t file_dim = std::stoull(fields[1], &used_b);
        if (used_a == fields[0].size() && used_b == fields[1].size()) {
          if (file_dim != dim)
            throw Error(ErrorKind::data,
                        path + ": vector file declares dim " +
                            std::to_string(file_dim) + " but expected " +
                            std::to_string(dim));
          first_content_line = false;
          continue;
        }
      } catch (const Error&) {
        throw;
      } catch (const std::exception&) {
        // not a header; fall through to vector parsing
      }
    }
    first_content_line = false;

    if (fields.size() != dim + 1)
      throw Error(ErrorKind::data,
                  path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dim + 1) + " fields, got " +
                      std::to_string(fields.size()));
    std::vector<double> values(dim);
    for (size_t j = 0; j < dim; ++j) {
      try {
        size_t used = 0;
        values[j] = std::stod(fields[j + 1], &used);
        if (used != fields[j + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error(ErrorKind::data, path + ":" + std::to_string(line_no) +
                                         ": non-numeric value '" +
                                         fields[j + 1] + "'");
      }
    }
    const int id = vocab.id_of(fields[0]);
    if (id == 0) continue;  // token not in vocabulary
    if (!filled[id]) {
      std::copy(values.begin(), values.end(),
                result.matrix->data.begin() + id * dim);
      filled[id] = true;
      ++result.covered;
    }
  }

  Rng rng(derive_seed(seed, 0x0EEDu));
  for (size_t id = 1; id < V; ++id) {
    if (filled[id]) continue;
    for (size_t j = 0; j < dim; ++j)
      result.matrix->data[id * dim + j] = rng.uniform(-0.25, 0.25);
  }
  return result;
}

}  // namespace agcnn
