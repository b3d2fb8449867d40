#include "agcnn/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "agcnn/embedding.hpp"
#include "agcnn/error.hpp"
#include "agcnn/model.hpp"

namespace agcnn {

namespace {

void mean_and_pop_std(const std::vector<double>& xs, double& mean,
                      double& stddev) {
  mean = 0.0;
  stddev = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  stddev = std::sqrt(acc / static_cast<double>(xs.size()));
}

std::string window_list_label(const std::vector<size_t>& ws) {
  std::string s = "(";
  for (size_t i = 0; i < ws.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(ws[i]);
  }
  return s + ")";
}

std::vector<size_t> windows_from_json(const nlohmann::json& value) {
  std::vector<size_t> ws;
  if (!value.is_array())
    throw Error(ErrorKind::config, "window combo must be an array");
  for (const auto& v : value) {
    if (!v.is_number_unsigned() && !v.is_number_integer())
      throw Error(ErrorKind::config, "window sizes must be integers");
    ws.push_back(v.get<size_t>());
  }
  return ws;
}

size_t uint_from_json(const nlohmann::json& value, const char* what) {
  if (!value.is_number_unsigned() && !value.is_number_integer())
    throw Error(ErrorKind::config, std::string(what) + " must be an integer");
  return value.get<size_t>();
}

void apply_rung(HyperParams& hp, const std::string& rung) {
  if (rung == "cnn_static_a") {
    hp.use_attention = false;
    hp.activation = hp.gate_activation = ActivationKind::relu;
    hp.init_scheme = InitScheme::legacy_cnn;
  } else if (rung == "cnn_static_b") {
    hp.use_attention = false;
    hp.activation = hp.gate_activation = ActivationKind::relu;
    hp.init_scheme = InitScheme::agcnn;
  } else if (rung == "agcnn_relu") {
    hp.use_attention = true;
    hp.activation = hp.gate_activation = ActivationKind::relu;
    hp.init_scheme = InitScheme::agcnn;
  } else if (rung == "agcnn_nlrelu") {
    hp.use_attention = true;
    hp.activation = hp.gate_activation = ActivationKind::nlrelu;
    hp.init_scheme = InitScheme::agcnn;
  } else if (rung == "agcnn_selu") {
    hp.use_attention = true;
    hp.activation = hp.gate_activation = ActivationKind::selu;
    hp.init_scheme = InitScheme::agcnn;
  } else {
    throw Error(ErrorKind::config, "unknown ablation rung: " + rung);
  }
}

void apply_preset_fields(HyperParams& hp, const HyperParams& preset) {
  hp.conv_windows = preset.conv_windows;
  hp.n_maps_conv = preset.n_maps_conv;
  hp.attn_windows = preset.attn_windows;
  hp.n_maps_attn = preset.n_maps_attn;
  hp.keep_rate = preset.keep_rate;
  hp.use_attention = true;
}

}  // namespace

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::conv_window: return "conv_window";
    case SweepAxis::conv_window_combo: return "conv_window_combo";
    case SweepAxis::attn_window: return "attn_window";
    case SweepAxis::attn_window_combo: return "attn_window_combo";
    case SweepAxis::n_maps_conv: return "n_maps_conv";
    case SweepAxis::n_maps_attn: return "n_maps_attn";
    case SweepAxis::keep_rate: return "keep_rate";
    case SweepAxis::activation: return "activation";
    case SweepAxis::ablation_rung: return "ablation_rung";
    case SweepAxis::preset: return "preset";
    case SweepAxis::cv: return "cv";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(SweepAxis::cv); ++i) {
    const auto axis = static_cast<SweepAxis>(i);
    if (name == sweep_axis_name(axis)) return axis;
  }
  throw Error(ErrorKind::config, "unknown sweep axis: " + name);
}

SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open sweep spec: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::config,
                path + ": bad sweep spec json: " + e.what());
  }
  SweepSpec spec;
  try {
    spec.corpus = j.at("corpus");
    spec.baseline = hyperparams_from_json(j.at("baseline"));
    spec.axis = parse_sweep_axis(j.at("axis"));
    for (const auto& v : j.at("values")) spec.values.push_back(v);
    spec.replications = j.at("replications");
    spec.folds = j.at("folds");
    spec.seed = j.at("seed");
    if (j.contains("output")) spec.output = j.at("output");
    if (j.contains("embedding")) spec.embedding = j.at("embedding");
    if (j.contains("preserve_case")) spec.preserve_case = j.at("preserve_case");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::config, path + ": bad sweep spec: " + e.what());
  }
  if (spec.values.empty())
    throw Error(ErrorKind::config, path + ": values must be non-empty");
  if (spec.replications < 1)
    throw Error(ErrorKind::config, path + ": replications must be >= 1");
  if (spec.folds < 2)
    throw Error(ErrorKind::config, path + ": folds must be >= 2");
  return spec;
}

nlohmann::json sweep_spec_to_json(const SweepSpec& spec) {
  return nlohmann::json{
      {"corpus", spec.corpus},
      {"baseline", hyperparams_to_json(spec.baseline)},
      {"axis", sweep_axis_name(spec.axis)},
      {"values", spec.values},
      {"replications", spec.replications},
      {"folds", spec.folds},
      {"seed", spec.seed},
      {"output", spec.output},
      {"embedding", spec.embedding},
      {"preserve_case", spec.preserve_case},
  };
}

TrialContext make_trial_context(const LabeledCorpus& corpus,
                                const std::string& embedding_path,
                                size_t embedding_dim, uint64_t seed) {
  TrialContext ctx;
  ctx.corpus = &corpus;
  ctx.vocab = build_vocab(corpus);
  ctx.encoded = encode(corpus, ctx.vocab);
  if (!embedding_path.empty()) {
    if (embedding_dim == 0)
      throw Error(ErrorKind::config,
                  "embedding_dim required to load pretrained vectors");
    ctx.pretrained =
        load_pretrained(embedding_path, ctx.vocab, embedding_dim, seed).matrix;
  }
  return ctx;
}

HyperParams preset_baseline(ActivationKind act) {
  HyperParams hp;
  hp.conv_windows = {3};
  hp.n_maps_conv = 100;
  hp.attn_windows = {3};
  hp.n_maps_attn = 1;
  hp.keep_rate = 0.5;
  hp.activation = hp.gate_activation = act;
  return hp;
}

HyperParams preset_proposed(ActivationKind act) {
  HyperParams hp;
  hp.conv_windows = {1, 2, 3, 4, 5};
  hp.n_maps_conv = 200;
  hp.attn_windows = {1, 3, 5, 7};
  hp.n_maps_attn = 10;
  hp.keep_rate = 0.5;
  hp.activation = hp.gate_activation = act;
  return hp;
}

HyperParams apply_axis_value(const HyperParams& base, SweepAxis axis,
                             const nlohmann::json& value) {
  HyperParams hp = base;
  try {
    switch (axis) {
      case SweepAxis::conv_window:
        hp.conv_windows = {uint_from_json(value, "conv_window")};
        break;
      case SweepAxis::conv_window_combo:
        hp.conv_windows = windows_from_json(value);
        break;
      case SweepAxis::attn_window:
        hp.attn_windows = {uint_from_json(value, "attn_window")};
        break;
      case SweepAxis::attn_window_combo:
        hp.attn_windows = windows_from_json(value);
        break;
      case SweepAxis::n_maps_conv:
        hp.n_maps_conv = uint_from_json(value, "n_maps_conv");
        break;
      case SweepAxis::n_maps_attn:
        hp.n_maps_attn = uint_from_json(value, "n_maps_attn");
        break;
      case SweepAxis::keep_rate:
        if (!value.is_number())
          throw Error(ErrorKind::config, "keep_rate must be a number");
        hp.keep_rate = value.get<double>();
        break;
      case SweepAxis::activation:
        if (!value.is_string())
          throw Error(ErrorKind::config, "activation must be a string");
        hp.activation = hp.gate_activation = parse_activation(value);
        break;
      case SweepAxis::ablation_rung:
        if (!value.is_string())
          throw Error(ErrorKind::config, "ablation rung must be a string");
        apply_rung(hp, value.get<std::string>());
        break;
      case SweepAxis::preset: {
        if (!value.is_string())
          throw Error(ErrorKind::config, "preset must be a string");
        const std::string name = value.get<std::string>();
        if (name == "baseline")
          apply_preset_fields(hp, preset_baseline(hp.activation));
        else if (name == "proposed")
          apply_preset_fields(hp, preset_proposed(hp.activation));
        else
          throw Error(ErrorKind::config, "unknown preset: " + name);
        break;
      }
      case SweepAxis::cv:
        break;  // the value is decorative; the baseline runs as-is
    }
    hp.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config,
                std::string("rejected axis value ") + value.dump() + ": " +
                    e.what());
  }
  return hp;
}

bool is_baseline_value(const HyperParams& base, SweepAxis axis,
                       const nlohmann::json& value) {
  switch (axis) {
    case SweepAxis::conv_window:
      return base.conv_windows ==
             std::vector<size_t>{uint_from_json(value, "conv_window")};
    case SweepAxis::conv_window_combo:
      return base.conv_windows == windows_from_json(value);
    case SweepAxis::attn_window:
      return base.attn_windows ==
             std::vector<size_t>{uint_from_json(value, "attn_window")};
    case SweepAxis::attn_window_combo:
      return base.attn_windows == windows_from_json(value);
    case SweepAxis::n_maps_conv:
      return base.n_maps_conv == uint_from_json(value, "n_maps_conv");
    case SweepAxis::n_maps_attn:
      return base.n_maps_attn == uint_from_json(value, "n_maps_attn");
    case SweepAxis::keep_rate:
      return value.is_number() && base.keep_rate == value.get<double>();
    case SweepAxis::activation:
      return value.is_string() &&
             base.activation == parse_activation(value.get<std::string>());
    case SweepAxis::ablation_rung:
      return false;  // the first rung anchors the ladder instead
    case SweepAxis::preset:
      return value.is_string() && value.get<std::string>() == "baseline";
    case SweepAxis::cv:
      return true;
  }
  return false;
}

std::string axis_value_label(SweepAxis axis, const nlohmann::json& value) {
  switch (axis) {
    case SweepAxis::conv_window_combo:
    case SweepAxis::attn_window_combo:
      return window_list_label(windows_from_json(value));
    default:
      if (value.is_string()) return value.get<std::string>();
      return value.dump();
  }
}

TrialResult run_trial(const HyperParams& config, const TrialContext& ctx,
                      const FoldPlan& plan, uint64_t seed) {
  if (!ctx.corpus)
    throw Error(ErrorKind::contract, "trial context has no corpus");
  if (plan.assignments.size() != ctx.encoded.size())
    throw Error(ErrorKind::contract, "fold plan does not match the corpus");

  HyperParams hp = config;
  hp.classes = ctx.corpus->class_count;
  hp.validate();
  if (hp.embedding_mode == EmbeddingMode::static_pretrained && !ctx.pretrained)
    throw Error(ErrorKind::config,
                "static embedding mode requires a pretrained vector file");

  const auto t0 = std::chrono::steady_clock::now();
  TrialResult result;
  result.config = hp;
  result.seed = seed;

  for (int fold = 0; fold < plan.k; ++fold) {
    auto model = init_params(hp, ctx.vocab.size_with_padding(),
                             derive_seed(seed, 0xF01D + fold));
    model.vocab_hash = ctx.vocab.content_hash;
    if (hp.embedding_mode == EmbeddingMode::static_pretrained)
      install_embeddings(model, ctx.pretrained);

    std::vector<EncodedExample> train_set, test_set;
    for (size_t i = 0; i < ctx.encoded.size(); ++i) {
      if (plan.assignments[i] == fold)
        test_set.push_back(ctx.encoded[i]);
      else
        train_set.push_back(ctx.encoded[i]);
    }
    try {
      train(model, train_set);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::divergence) throw;
      result.failed = true;
      result.failed_fold = fold;
      result.failure = e.what();
      break;
    }
    result.fold_accuracies.push_back(evaluate(model, test_set));
  }

  mean_and_pop_std(result.fold_accuracies, result.mean_accuracy,
                   result.std_accuracy);
  const auto t1 = std::chrono::steady_clock::now();
  result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  return result;
}

namespace {

// Runs tasks 0..n-1 on up to `workers` threads. Results are written by
// index, so aggregates do not depend on the worker count.
void run_indexed(size_t n, int workers,
                 const std::function<void(size_t)>& task) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto body = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(n));
  pool.reserve(count);
  for (int t = 0; t < count; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

AggregateResult aggregate_from(std::vector<TrialResult> trials) {
  AggregateResult agg;
  agg.replications = std::move(trials);
  std::vector<double> means;
  for (const auto& t : agg.replications) {
    if (t.failed)
      agg.complete = false;
    else
      means.push_back(t.mean_accuracy);
  }
  mean_and_pop_std(means, agg.mean_accuracy, agg.std_accuracy);
  return agg;
}

}  // namespace

AggregateResult replicate(const HyperParams& config, const TrialContext& ctx,
                          int k, int r, uint64_t seed, int workers) {
  if (r < 1) throw Error(ErrorKind::config, "replications must be >= 1");
  std::vector<TrialResult> trials(r);
  run_indexed(static_cast<size_t>(r), workers, [&](size_t i) {
    const uint64_t rep_seed = derive_seed(seed, i);
    const auto plan = kfold_plan(*ctx.corpus, k, rep_seed);
    trials[i] = run_trial(config, ctx, plan, rep_seed);
    trials[i].replication_index = static_cast<int>(i);
  });
  return aggregate_from(std::move(trials));
}

double pct_change(double value_acc, double baseline_acc) {
  if (!(baseline_acc > 0.0))
    throw Error(ErrorKind::contract, "pct_change requires baseline > 0");
  return 100.0 * (value_acc - baseline_acc) / baseline_acc;
}

SweepReport ofat_sweep(const SweepSpec& spec, const LabeledCorpus& corpus,
                       int workers) {
  // reject invalid values before any training happens
  std::vector<HyperParams> configs;
  configs.reserve(spec.values.size());
  for (const auto& v : spec.values)
    configs.push_back(apply_axis_value(spec.baseline, spec.axis, v));

  const auto t_start = std::chrono::steady_clock::now();
  TrialContext ctx = make_trial_context(corpus, spec.embedding,
                                        spec.baseline.embedding_dim, spec.seed);

  SweepReport report;
  report.corpus_name = corpus.name;
  report.axis = spec.axis;
  report.spec = spec;
  report.workers = workers;
  report.rows.resize(spec.values.size());

  struct TaskRef {
    size_t row;
    int rep;
  };
  std::vector<TaskRef> tasks;
  std::vector<std::vector<TrialResult>> trials(spec.values.size());
  for (size_t row = 0; row < spec.values.size(); ++row) {
    trials[row].resize(spec.replications);
    for (int rep = 0; rep < spec.replications; ++rep)
      tasks.push_back({row, rep});
  }

  run_indexed(tasks.size(), workers, [&](size_t i) {
    const auto [row, rep] = tasks[i];
    const uint64_t row_seed = derive_seed(spec.seed, row);
    const uint64_t rep_seed = derive_seed(row_seed, rep);
    const auto plan = kfold_plan(corpus, spec.folds, rep_seed);
    trials[row][rep] = run_trial(configs[row], ctx, plan, rep_seed);
    trials[row][rep].replication_index = rep;
  });

  int baseline_row = -1;
  for (size_t row = 0; row < spec.values.size(); ++row) {
    auto& r = report.rows[row];
    r.value = spec.values[row];
    r.label = axis_value_label(spec.axis, spec.values[row]);
    r.seed = derive_seed(spec.seed, row);
    r.aggregate = aggregate_from(std::move(trials[row]));
    r.is_baseline = is_baseline_value(spec.baseline, spec.axis, r.value);
    if (r.is_baseline && baseline_row < 0)
      baseline_row = static_cast<int>(row);
    report.complete = report.complete && r.aggregate.complete;
  }
  if (spec.axis == SweepAxis::ablation_rung && !report.rows.empty()) {
    baseline_row = 0;  // the ladder is read against its first rung
    report.rows[0].is_baseline = true;
  }

  if (baseline_row >= 0) {
    report.baseline = report.rows[baseline_row].aggregate;
  } else {
    // the baseline setting is not among the values; run it as reference
    report.baseline = replicate(spec.baseline, ctx, spec.folds,
                                spec.replications,
                                derive_seed(spec.seed, 0xBA5Eu), workers);
    report.complete = report.complete && report.baseline.complete;
  }

  const bool baseline_usable = report.baseline.mean_accuracy > 0.0;
  if (!baseline_usable) report.complete = false;
  for (size_t row = 0; row < report.rows.size(); ++row) {
    auto& r = report.rows[row];
    if (static_cast<int>(row) == baseline_row)
      r.pct_change = 0.0;  // exactly zero, no float residue
    else if (baseline_usable)
      r.pct_change =
          pct_change(r.aggregate.mean_accuracy, report.baseline.mean_accuracy);
    else
      r.pct_change = 0.0;  // reference collapsed; report flagged incomplete
  }

  if (spec.axis == SweepAxis::ablation_rung) {
    auto mean_of = [&](size_t i) {
      return report.rows[i].aggregate.mean_accuracy;
    };
    if (report.rows.size() == 5) {
      report.deltas = {
          {"initialization effect", report.rows[0].label,
           report.rows[1].label, mean_of(1) - mean_of(0)},
          {"attention-gated layer contribution", report.rows[1].label,
           report.rows[2].label, mean_of(2) - mean_of(1)},
          {"nlrelu activation effect", report.rows[2].label,
           report.rows[3].label, mean_of(3) - mean_of(2)},
          {"selu activation effect", report.rows[2].label,
           report.rows[4].label, mean_of(4) - mean_of(2)},
      };
    }
  }

  const auto t_end = std::chrono::steady_clock::now();
  std::ostringstream stamp;
  stamp << iso_timestamp_now() << " wall_total_s="
        << std::chrono::duration<double>(t_end - t_start).count()
        << " wall_trials_s=";
  for (size_t row = 0; row < report.rows.size(); ++row) {
    if (row) stamp << ";";
    const auto& reps = report.rows[row].aggregate.replications;
    for (size_t rep = 0; rep < reps.size(); ++rep) {
      if (rep) stamp << ",";
      stamp << reps[rep].wall_seconds;
    }
  }
  report.timestamp = stamp.str();
  return report;
}

SweepReport grid_search_windows(GridLayer layer,
                                const std::vector<std::vector<size_t>>& combos,
                                const HyperParams& base,
                                const LabeledCorpus& corpus, int replications,
                                int folds, uint64_t seed, int workers,
                                const std::string& embedding_path) {
  SweepSpec spec;
  spec.corpus = corpus.name;
  spec.baseline = base;
  spec.axis = layer == GridLayer::first_conv ? SweepAxis::conv_window_combo
                                             : SweepAxis::attn_window_combo;
  for (const auto& combo : combos) spec.values.push_back(combo);
  spec.replications = replications;
  spec.folds = folds;
  spec.seed = seed;
  spec.embedding = embedding_path;
  return ofat_sweep(spec, corpus, workers);
}

std::vector<std::string> ablation_rungs() {
  return {"cnn_static_a", "cnn_static_b", "agcnn_relu", "agcnn_nlrelu",
          "agcnn_selu"};
}

SweepReport ablation_ladder(const LabeledCorpus& corpus,
                            const HyperParams& base, int replications,
                            int folds, uint64_t seed, int workers,
                            const std::string& embedding_path) {
  SweepSpec spec;
  spec.corpus = corpus.name;
  spec.baseline = base;
  spec.axis = SweepAxis::ablation_rung;
  for (const auto& rung : ablation_rungs()) spec.values.push_back(rung);
  spec.replications = replications;
  spec.folds = folds;
  spec.seed = seed;
  spec.embedding = embedding_path;
  return ofat_sweep(spec, corpus, workers);
}

std::string iso_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace agcnn
