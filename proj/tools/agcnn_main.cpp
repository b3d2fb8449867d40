// agcnn — command-line front end: train, eval, cv, sweep, grid, ablate,
// report. Exit codes: 0 success, 2 usage, 3 config, 4 data, 5 divergence,
// 6 I/O. Failure paths print one "error: <kind>: <message>" line to
// stderr; success paths never write to stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "agcnn/checkpoint.hpp"
#include "agcnn/embedding.hpp"
#include "agcnn/error.hpp"
#include "agcnn/model.hpp"
#include "agcnn/report.hpp"
#include "agcnn/sweep.hpp"

namespace fs = std::filesystem;
using namespace agcnn;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string spec_path;
  std::string corpus_path;
  std::string embedding_path;
  std::string checkpoint_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = 1;
  int folds = 10;
  int reps = 1;
  bool folds_set = false;
  bool reps_set = false;
  bool preserve_case = false;
};

// Relative corpus paths fall back to AGCNN_DATA_DIR.
std::string resolve_data_path(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path))
    return path;
  if (const char* root = std::getenv("AGCNN_DATA_DIR")) {
    const auto joined = fs::path(root) / path;
    if (fs::exists(joined)) return joined.string();
  }
  return path;
}

HyperParams load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::config, path + ": bad config json: " + e.what());
  }
  return hyperparams_from_json(j);
}

void apply_overrides(HyperParams& hp, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::usage, "--set expects key=value, got: " + kv);
    apply_override(hp, kv.substr(0, eq), kv.substr(eq + 1));
  }
  hp.validate();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory: " + dir);
}

struct LoadedData {
  LabeledCorpus corpus;
  Vocabulary vocab;
  std::vector<EncodedExample> encoded;
};

LoadedData load_data(const CommonOpts& opts) {
  if (opts.corpus_path.empty())
    throw Error(ErrorKind::usage, "--corpus is required");
  LoadedData data;
  data.corpus =
      load_corpus(resolve_data_path(opts.corpus_path), opts.preserve_case);
  data.vocab = build_vocab(data.corpus);
  data.encoded = encode(data.corpus, data.vocab);
  return data;
}

std::string stamp_line(double total_seconds) {
  std::ostringstream os;
  os << iso_timestamp_now() << " wall_total_s=" << total_seconds;
  return os.str();
}

int cmd_train(const CommonOpts& opts) {
  if (opts.config_path.empty())
    throw Error(ErrorKind::usage, "--config is required");
  auto hp = load_config(opts.config_path);
  apply_overrides(hp, opts.overrides);
  if (opts.seed_set) hp.seed = opts.seed;

  auto data = load_data(opts);
  hp.classes = data.corpus.class_count;
  hp.validate();

  auto model = init_params(hp, data.vocab.size_with_padding(), hp.seed);
  model.vocab_hash = data.vocab.content_hash;
  if (hp.embedding_mode == EmbeddingMode::static_pretrained) {
    if (opts.embedding_path.empty())
      throw Error(ErrorKind::config,
                  "static embedding mode requires --embedding");
    auto loaded = load_pretrained(resolve_data_path(opts.embedding_path),
                                  data.vocab, hp.embedding_dim, hp.seed);
    install_embeddings(model, loaded.matrix);
    std::cout << "pretrained coverage " << loaded.covered << "/"
              << loaded.vocab_size << "\n";
  }

  const auto log = train(model, data.encoded);

  ensure_out_dir(opts.out_dir);
  const std::string ckpt = opts.checkpoint_path.empty()
                               ? (fs::path(opts.out_dir) / "model.agcn").string()
                               : opts.checkpoint_path;
  save_checkpoint(model, ckpt);

  double total = 0.0;
  const auto log_path = (fs::path(opts.out_dir) / "train_log.txt").string();
  {
    std::ofstream out(log_path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write log: " + log_path);
    for (const auto& e : log) {
      out << "epoch " << e.epoch << " mean_loss " << e.mean_loss << "\n";
      total += e.wall_seconds;
    }
    out << "# " << stamp_line(total) << "\n";
  }
  std::cout << "trained epochs=" << log.size() << " final_loss="
            << (log.empty() ? 0.0 : log.back().mean_loss) << " checkpoint="
            << ckpt << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts) {
  if (opts.checkpoint_path.empty())
    throw Error(ErrorKind::usage, "--checkpoint is required");
  auto loaded = load_checkpoint(opts.checkpoint_path);
  auto data = load_data(opts);
  if (data.corpus.class_count != loaded.model.hp.classes)
    throw Error(ErrorKind::data,
                "corpus has " + std::to_string(data.corpus.class_count) +
                    " classes but the checkpoint expects " +
                    std::to_string(loaded.model.hp.classes));

  const bool vocab_ok = loaded.vocab_matches(data.vocab.content_hash);
  if (!vocab_ok)
    std::cout << "warning: corpus vocabulary hash does not match the "
                 "checkpoint; token ids may misalign\n";

  // ids beyond the stored embedding fall back to the padding row
  const int V = static_cast<int>(loaded.model.vocab_size);
  for (auto& ex : data.encoded)
    for (int& id : ex.token_ids)
      if (id >= V) id = 0;

  const double acc = evaluate(loaded.model, data.encoded);
  std::cout << "accuracy " << acc << "\n";

  ensure_out_dir(opts.out_dir);
  const auto metrics_path =
      (fs::path(opts.out_dir) / "eval_metrics.json").string();
  nlohmann::json metrics{
      {"accuracy", acc},
      {"examples", data.encoded.size()},
      {"corpus", opts.corpus_path},
      {"checkpoint", opts.checkpoint_path},
      {"vocab_hash_matches", vocab_ok},
      {"timestamp", stamp_line(0.0)},
  };
  std::ofstream out(metrics_path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write metrics: " + metrics_path);
  out << metrics.dump(2) << "\n";
  return 0;
}

void emit_both(const SweepReport& report, const std::string& out_dir,
               const std::string& stem) {
  ensure_out_dir(out_dir);
  const auto base = fs::path(out_dir) / stem;
  emit_report(report, base.string() + ".json", ReportFormat::json);
  emit_report(report, base.string() + ".csv", ReportFormat::csv);
  std::cout << "report " << base.string() << ".{json,csv}\n";
}

void print_rows(const SweepReport& report) {
  for (const auto& row : report.rows) {
    std::cout << row.label << " mean_accuracy=" << row.aggregate.mean_accuracy
              << " std=" << row.aggregate.std_accuracy
              << " pct_change=" << row.pct_change
              << (row.aggregate.complete ? "" : " [incomplete]") << "\n";
  }
}

int finish_sweep(const SweepReport& report, const CommonOpts& opts,
                 const std::string& stem) {
  print_rows(report);
  emit_both(report, opts.out_dir, stem);
  if (!report.complete) {
    std::cerr << "error: divergence: one or more trials diverged; "
                 "report marked incomplete\n";
    return 5;
  }
  return 0;
}

int cmd_cv(const CommonOpts& opts) {
  if (opts.config_path.empty())
    throw Error(ErrorKind::usage, "--config is required");
  auto hp = load_config(opts.config_path);
  apply_overrides(hp, opts.overrides);
  if (opts.seed_set) hp.seed = opts.seed;

  auto data = load_data(opts);

  SweepSpec spec;
  spec.corpus = opts.corpus_path;
  spec.baseline = hp;
  spec.axis = SweepAxis::cv;
  spec.values = {nlohmann::json("config")};
  spec.replications = opts.reps_set ? opts.reps : 1;
  spec.folds = opts.folds_set ? opts.folds : 10;
  spec.seed = hp.seed;
  spec.embedding = opts.embedding_path.empty()
                       ? ""
                       : resolve_data_path(opts.embedding_path);
  spec.preserve_case = opts.preserve_case;

  auto report = ofat_sweep(spec, data.corpus, opts.workers);
  return finish_sweep(report, opts, "cv_report");
}

// sweep/grid/ablate share spec loading and the flag overrides
int cmd_spec_driven(const CommonOpts& opts, const char* command) {
  if (opts.spec_path.empty())
    throw Error(ErrorKind::usage, "--spec is required");
  auto spec = load_sweep_spec(opts.spec_path);
  apply_overrides(spec.baseline, opts.overrides);
  if (opts.seed_set) spec.seed = opts.seed;
  if (!opts.corpus_path.empty()) spec.corpus = opts.corpus_path;
  if (opts.folds_set) spec.folds = opts.folds;
  if (opts.reps_set) spec.replications = opts.reps;
  if (!opts.embedding_path.empty()) spec.embedding = opts.embedding_path;
  if (!spec.embedding.empty()) spec.embedding = resolve_data_path(spec.embedding);

  const std::string cmd(command);
  const bool combo_axis = spec.axis == SweepAxis::conv_window_combo ||
                          spec.axis == SweepAxis::attn_window_combo;
  if (cmd == "grid" && !combo_axis)
    throw Error(ErrorKind::config,
                "grid expects a window-combination axis, got: " +
                    std::string(sweep_axis_name(spec.axis)));
  if (cmd == "ablate" && spec.axis != SweepAxis::ablation_rung)
    throw Error(ErrorKind::config,
                "ablate expects axis ablation_rung, got: " +
                    std::string(sweep_axis_name(spec.axis)));

  auto corpus = load_corpus(resolve_data_path(spec.corpus), spec.preserve_case);
  auto report = ofat_sweep(spec, corpus, opts.workers);
  const std::string stem =
      spec.output.empty() ? fs::path(opts.spec_path).stem().string()
                          : fs::path(spec.output).filename().string();
  return finish_sweep(report, opts, stem);
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
  if (in_path.empty())
    throw Error(ErrorKind::usage, "--in is required");
  std::string out = out_path;
  if (out.empty()) out = fs::path(in_path).replace_extension(".csv").string();
  render_report_csv(in_path, out);
  std::cout << "report " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-gated CNN for sentence classification"};
  app.require_subcommand(1);
  CommonOpts opts;
  std::string report_in, report_out;

  auto add_common = [&](CLI::App* cmd, bool with_spec) {
    if (with_spec)
      cmd->add_option("--spec", opts.spec_path, "sweep spec JSON");
    else
      cmd->add_option("--config", opts.config_path, "hyperparameter JSON");
    cmd->add_option("--corpus", opts.corpus_path, "LABEL<TAB>TEXT dataset");
    cmd->add_option("--embedding", opts.embedding_path, "text vector file");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--set", opts.overrides, "config override key=value")
        ->take_all();
    cmd->add_option("--workers", opts.workers, "worker threads")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--preserve-case", opts.preserve_case,
                  "keep letter case while cleaning");
    cmd->add_option_function<uint64_t>(
        "--seed", [&](uint64_t s) { opts.seed = s; opts.seed_set = true; },
        "override the seed");
    cmd->add_option_function<int>(
        "--folds", [&](int k) { opts.folds = k; opts.folds_set = true; },
        "cross-validation folds");
    cmd->add_option_function<int>(
        "--reps", [&](int r) { opts.reps = r; opts.reps_set = true; },
        "replications");
  };

  auto* train_cmd = app.add_subcommand("train", "train on a corpus");
  add_common(train_cmd, false);
  train_cmd->add_option("--checkpoint", opts.checkpoint_path,
                        "checkpoint output path");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, false);
  eval_cmd->add_option("--checkpoint", opts.checkpoint_path,
                       "checkpoint to load");

  auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation");
  add_common(cv_cmd, false);

  auto* sweep_cmd = app.add_subcommand("sweep", "one-factor-at-a-time sweep");
  add_common(sweep_cmd, true);
  auto* grid_cmd = app.add_subcommand("grid", "window-combination grid search");
  add_common(grid_cmd, true);
  auto* ablate_cmd = app.add_subcommand("ablate", "setting-combination ladder");
  add_common(ablate_cmd, true);

  auto* report_cmd = app.add_subcommand("report", "re-render a JSON report as CSV");
  report_cmd->add_option("--in", report_in, "report JSON path");
  report_cmd->add_option("--out", report_out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(opts);
    if (eval_cmd->parsed()) return cmd_eval(opts);
    if (cv_cmd->parsed()) return cmd_cv(opts);
    if (sweep_cmd->parsed()) return cmd_spec_driven(opts, "sweep");
    if (grid_cmd->parsed()) return cmd_spec_driven(opts, "grid");
    if (ablate_cmd->parsed()) return cmd_spec_driven(opts, "ablate");
    if (report_cmd->parsed()) return cmd_report(report_in, report_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind_name() << ": " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: usage: no command\n";
  return 2;
}
