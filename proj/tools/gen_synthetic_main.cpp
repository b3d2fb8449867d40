// Regenerates the bundled synthetic corpora under data/.

#include <fstream>
#include <iostream>

#include "agcnn/synthetic.hpp"

using namespace agcnn;

namespace {

void write_tsv(const LabeledCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  for (const auto& ex : corpus.examples) {
    out << ex.label << "\t";
    for (size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i) out << " ";
      out << ex.tokens[i];
    }
    out << "\n";
  }
  std::cout << path << ": " << corpus.examples.size() << " examples\n";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "data";
  write_tsv(make_negation_corpus(1000, 20240501), dir + "/synthetic_negation.tsv");
  write_tsv(make_keyword_corpus(1000, 20240502), dir + "/synthetic_keyword.tsv");
  return 0;
}
