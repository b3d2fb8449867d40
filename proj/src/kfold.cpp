#include "agcnn/kfold.hpp"

#include <numeric>

#include "agcnn/error.hpp"
#include "agcnn/rng.hpp"

namespace agcnn {

namespace {

void fisher_yates(std::vector<size_t>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = rng.next_below(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

FoldPlan kfold_plan(const LabeledCorpus& corpus, int k, uint64_t seed,
                    bool stratified) {
  if (k < 2) throw Error(ErrorKind::config, "kfold requires k >= 2");
  const size_t n = corpus.examples.size();
  if (n < static_cast<size_t>(k))
    throw Error(ErrorKind::config, "kfold requires at least k examples");

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n, -1);

  if (!stratified) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0));
    fisher_yates(order, rng);
    for (size_t i = 0; i < n; ++i)
      plan.assignments[order[i]] = static_cast<int>(i % k);
    return plan;
  }

  std::vector<std::vector<size_t>> by_class(corpus.class_count);
  for (size_t i = 0; i < n; ++i)
    by_class[corpus.examples[i].label].push_back(i);

  for (int label = 0; label < corpus.class_count; ++label) {
    auto& members = by_class[label];
    if (members.size() < static_cast<size_t>(k))
      throw Error(ErrorKind::config,
                  "stratification infeasible: class " + std::to_string(label) +
                      " has " + std::to_string(members.size()) +
                      " examples, fewer than k=" + std::to_string(k));
    Rng rng(derive_seed(seed, static_cast<uint64_t>(label) + 1));
    fisher_yates(members, rng);
    for (size_t i = 0; i < members.size(); ++i)
      plan.assignments[members[i]] = static_cast<int>(i % k);
  }
  return plan;
}

}  // namespace agcnn
