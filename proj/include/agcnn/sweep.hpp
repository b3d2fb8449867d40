#pragma once

#include <optional>
#include <string>
#include <vector>

#include "agcnn/corpus.hpp"
#include "agcnn/hyperparams.hpp"
#include "agcnn/kfold.hpp"
#include "agcnn/tensor.hpp"

#include "json.hpp"

namespace agcnn {

// Axes varied one-factor-at-a-time against a fixed baseline. `preset` and
// `cv` are artifact extensions: `preset` drives the baseline-vs-proposed
// comparison, `cv` wraps a single cross-validation run in report form.
enum class SweepAxis {
  conv_window,
  conv_window_combo,
  attn_window,
  attn_window_combo,
  n_maps_conv,
  n_maps_attn,
  keep_rate,
  activation,
  ablation_rung,
  preset,
  cv,
};

const char* sweep_axis_name(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

// Per-configuration k-fold result. mean/std are recomputable from the
// fold list; std is the population standard deviation.
struct TrialResult {
  HyperParams config;
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  int replication_index = 0;
  uint64_t seed = 0;
  double wall_seconds = 0.0;
  bool failed = false;
  int failed_fold = -1;
  std::string failure;
};

// Replication average: mean of per-replication means, population std
// across them. Failed trials are excluded and flip `complete`.
struct AggregateResult {
  std::vector<TrialResult> replications;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  bool complete = true;

  size_t successful() const {
    size_t n = 0;
    for (const auto& t : replications)
      if (!t.failed) ++n;
    return n;
  }
};

struct SweepSpec {
  std::string corpus;  // dataset path, resolved against AGCNN_DATA_DIR
  HyperParams baseline;
  SweepAxis axis = SweepAxis::keep_rate;
  std::vector<nlohmann::json> values;
  int replications = 10;
  int folds = 10;
  uint64_t seed = 0;
  std::string output;          // report path stem
  std::string embedding;       // vector file for static mode, optional
  bool preserve_case = false;  // TREC-style corpora
};

SweepSpec load_sweep_spec(const std::string& path);
nlohmann::json sweep_spec_to_json(const SweepSpec& spec);

struct SweepRow {
  nlohmann::json value;
  std::string label;
  AggregateResult aggregate;
  double pct_change = 0.0;
  bool is_baseline = false;
  uint64_t seed = 0;
};

struct RungDelta {
  std::string label;
  std::string from;
  std::string to;
  double delta_accuracy = 0.0;
};

struct SweepReport {
  std::string corpus_name;
  SweepAxis axis = SweepAxis::keep_rate;
  SweepSpec spec;  // echo
  int workers = 1;
  bool complete = true;
  AggregateResult baseline;
  std::vector<SweepRow> rows;
  std::vector<RungDelta> deltas;  // ablation ladder only
  // The one volatile field: ISO-8601 time plus all wall-clock measurements.
  // Masking this single line makes report files byte-comparable.
  std::string timestamp;
};

// Shared read-only inputs for trials; safe to use from worker threads.
struct TrialContext {
  const LabeledCorpus* corpus = nullptr;
  Vocabulary vocab;
  std::vector<EncodedExample> encoded;
  TensorPtr pretrained;  // null unless an embedding file was supplied
};

TrialContext make_trial_context(const LabeledCorpus& corpus,
                                const std::string& embedding_path = "",
                                size_t embedding_dim = 0, uint64_t seed = 0);

// Baseline of the sensitivity study: all kernel window sizes 3, 100 and 1
// feature maps for the two convolutional layers, keep rate 0.5.
HyperParams preset_baseline(ActivationKind act = ActivationKind::nlrelu);

// Improved settings: first-layer windows (1,2,3,4,5) with 200 maps,
// attention windows (1,3,5,7) with 10 kernels each, keep rate 0.5.
HyperParams preset_proposed(ActivationKind act = ActivationKind::nlrelu);

// Clones `base` and applies one axis value. Throws ErrorKind::config for
// type-incompatible or invariant-violating values, naming the value.
HyperParams apply_axis_value(const HyperParams& base, SweepAxis axis,
                             const nlohmann::json& value);

// True when the axis value equals the baseline's own setting.
bool is_baseline_value(const HyperParams& base, SweepAxis axis,
                       const nlohmann::json& value);

std::string axis_value_label(SweepAxis axis, const nlohmann::json& value);

// Trains on all-but-fold, evaluates on the fold, for every fold of the
// plan. Deterministic in (config, corpus, plan, seed). A diverging fold
// marks the trial failed instead of contaminating the average.
TrialResult run_trial(const HyperParams& config, const TrialContext& ctx,
                      const FoldPlan& plan, uint64_t seed);

// Runs r trials with seeds derived as hash(seed, replication_index), each
// on its own fold plan, and averages the means.
AggregateResult replicate(const HyperParams& config, const TrialContext& ctx,
                          int k, int r, uint64_t seed, int workers = 1);

// 100 * (value - baseline) / baseline; requires baseline > 0.
double pct_change(double value_acc, double baseline_acc);

// One-factor-at-a-time sweep: clone baseline, set the axis, replicate.
// Percent change is computed against the baseline value's own aggregate,
// which reports exactly 0.
SweepReport ofat_sweep(const SweepSpec& spec, const LabeledCorpus& corpus,
                       int workers = 1);

enum class GridLayer { first_conv, attention };

// Window-combination grid search over either convolutional layer; one
// aggregated row per combo, in input order.
SweepReport grid_search_windows(GridLayer layer,
                                const std::vector<std::vector<size_t>>& combos,
                                const HyperParams& base,
                                const LabeledCorpus& corpus, int replications,
                                int folds, uint64_t seed, int workers = 1,
                                const std::string& embedding_path = "");

// The five-rung setting ladder: plain CNN with its own init, plain CNN
// with agcnn init, then the attention-gated model under ReLU, NLReLU and
// SELU. Reports rung-to-rung deltas.
SweepReport ablation_ladder(const LabeledCorpus& corpus,
                            const HyperParams& base, int replications,
                            int folds, uint64_t seed, int workers = 1,
                            const std::string& embedding_path = "");

// Names the five ladder rungs in order.
std::vector<std::string> ablation_rungs();

std::string iso_timestamp_now();

}  // namespace agcnn
