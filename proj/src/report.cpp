#include "agcnn/report.hpp"

#include <cstdio>
#include <fstream>

#include "agcnn/error.hpp"

namespace agcnn {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

nlohmann::json trial_to_json(const TrialResult& t) {
  nlohmann::json j{
      {"replication_index", t.replication_index},
      {"seed", t.seed},
      {"fold_accuracies", t.fold_accuracies},
      {"mean_accuracy", t.mean_accuracy},
      {"std_accuracy", t.std_accuracy},
      {"failed", t.failed},
  };
  if (t.failed) {
    j["failed_fold"] = t.failed_fold;
    j["failure"] = t.failure;
  }
  return j;
}

TrialResult trial_from_json(const nlohmann::json& j) {
  TrialResult t;
  t.replication_index = j.at("replication_index");
  t.seed = j.at("seed");
  t.fold_accuracies = j.at("fold_accuracies").get<std::vector<double>>();
  t.mean_accuracy = j.at("mean_accuracy");
  t.std_accuracy = j.at("std_accuracy");
  t.failed = j.at("failed");
  if (t.failed) {
    t.failed_fold = j.at("failed_fold");
    t.failure = j.at("failure");
  }
  return t;
}

nlohmann::json aggregate_to_json(const AggregateResult& a) {
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& t : a.replications) reps.push_back(trial_to_json(t));
  return nlohmann::json{
      {"mean_accuracy", a.mean_accuracy},
      {"std_accuracy", a.std_accuracy},
      {"complete", a.complete},
      {"replications", reps},
  };
}

}  // namespace

nlohmann::json report_to_json(const SweepReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({
        {"value", r.value},
        {"label", r.label},
        {"seed", r.seed},
        {"mean_accuracy", r.aggregate.mean_accuracy},
        {"std_accuracy", r.aggregate.std_accuracy},
        {"pct_change", r.pct_change},
        {"is_baseline", r.is_baseline},
        {"complete", r.aggregate.complete},
        {"replications", aggregate_to_json(r.aggregate)["replications"]},
    });
  }
  nlohmann::json deltas = nlohmann::json::array();
  for (const auto& d : report.deltas) {
    deltas.push_back({{"label", d.label},
                      {"from", d.from},
                      {"to", d.to},
                      {"delta_accuracy", d.delta_accuracy}});
  }
  return nlohmann::json{
      {"schema", "agcnn-sweep-report"},
      {"version", 1},
      {"metadata",
       {{"corpus", report.corpus_name},
        {"axis", sweep_axis_name(report.axis)},
        {"replications", report.spec.replications},
        {"folds", report.spec.folds},
        {"seed", report.spec.seed},
        {"workers", report.workers},
        {"complete", report.complete},
        {"timestamp", report.timestamp}}},
      {"spec_echo", sweep_spec_to_json(report.spec)},
      {"baseline",
       {{"mean_accuracy", report.baseline.mean_accuracy},
        {"std_accuracy", report.baseline.std_accuracy},
        {"complete", report.baseline.complete}}},
      {"deltas", deltas},
      {"rows", rows},
  };
}

SweepReport report_from_json(const nlohmann::json& j) {
  SweepReport report;
  try {
    if (j.at("schema") != "agcnn-sweep-report")
      throw Error(ErrorKind::data, "not an agcnn sweep report");
    const auto& meta = j.at("metadata");
    report.corpus_name = meta.at("corpus");
    report.axis = parse_sweep_axis(meta.at("axis"));
    report.workers = meta.at("workers");
    report.complete = meta.at("complete");
    report.timestamp = meta.at("timestamp");

    const auto& echo = j.at("spec_echo");
    report.spec.corpus = echo.at("corpus");
    report.spec.baseline = hyperparams_from_json(echo.at("baseline"));
    report.spec.axis = parse_sweep_axis(echo.at("axis"));
    for (const auto& v : echo.at("values")) report.spec.values.push_back(v);
    report.spec.replications = echo.at("replications");
    report.spec.folds = echo.at("folds");
    report.spec.seed = echo.at("seed");
    report.spec.output = echo.at("output");
    report.spec.embedding = echo.at("embedding");
    report.spec.preserve_case = echo.at("preserve_case");

    report.baseline.mean_accuracy = j.at("baseline").at("mean_accuracy");
    report.baseline.std_accuracy = j.at("baseline").at("std_accuracy");
    report.baseline.complete = j.at("baseline").at("complete");

    for (const auto& d : j.at("deltas")) {
      report.deltas.push_back({d.at("label"), d.at("from"), d.at("to"),
                               d.at("delta_accuracy")});
    }
    for (const auto& rj : j.at("rows")) {
      SweepRow row;
      row.value = rj.at("value");
      row.label = rj.at("label");
      row.seed = rj.at("seed");
      row.pct_change = rj.at("pct_change");
      row.is_baseline = rj.at("is_baseline");
      row.aggregate.mean_accuracy = rj.at("mean_accuracy");
      row.aggregate.std_accuracy = rj.at("std_accuracy");
      row.aggregate.complete = rj.at("complete");
      for (const auto& t : rj.at("replications"))
        row.aggregate.replications.push_back(trial_from_json(t));
      report.rows.push_back(std::move(row));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::data, std::string("bad report json: ") + e.what());
  }
  return report;
}

void emit_report(const SweepReport& report, const std::string& path,
                 ReportFormat format) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write report: " + path);
  if (format == ReportFormat::json) {
    out << report_to_json(report).dump(2) << "\n";
  } else {
    out << "axis_value,mean_accuracy,std_accuracy,pct_change,"
           "n_replications,seed\n";
    for (const auto& r : report.rows) {
      out << csv_escape(r.label) << "," << fixed6(r.aggregate.mean_accuracy)
          << "," << fixed6(r.aggregate.std_accuracy) << ","
          << fixed6(r.pct_change) << "," << r.aggregate.replications.size()
          << "," << r.seed << "\n";
    }
  }
  if (!out) throw Error(ErrorKind::io, "write failed for report: " + path);
}

SweepReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open report: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::data, path + ": bad report json: " + e.what());
  }
  return report_from_json(j);
}

void render_report_csv(const std::string& json_path,
                       const std::string& csv_path) {
  emit_report(load_report_json(json_path), csv_path, ReportFormat::csv);
}

}  // namespace agcnn
