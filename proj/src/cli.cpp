#include "mtl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mtl/attrib.hpp"
#include "mtl/dataset.hpp"
#include "mtl/report.hpp"
#include "mtl/synth.hpp"
#include "mtl/train.hpp"

namespace mtl::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": JSON parse error: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Tracks outputs and timing for the manifest of one command.
class Run {
 public:
  Run(std::string command, fs::path out_dir)
      : out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    fs::create_directories(out_dir_);
  }

  void input(const fs::path& p) { manifest_.input_digests.emplace_back(p.string(), file_digest(p)); }
  void config(const fs::path& p) { manifest_.config_digest = file_digest(p); }
  void seed(std::uint64_t s) { manifest_.seed = s; }

  void text(const std::string& name, const std::string& content) {
    write_text(out_dir_ / name, content);
    manifest_.outputs.push_back(name);
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  void finish() {
    manifest_.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    write_json(out_dir_ / "manifest.json", manifest_.to_json());
  }

 private:
  fs::path out_dir_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

std::string dataset_csv(const Dataset& ds) {
  std::ostringstream s;
  write_dataset_csv(ds, s);
  return s.str();
}

Dataset load_for_training(const fs::path& data, const fs::path& schema,
                          const std::vector<std::string>& tasks) {
  Dataset ds = load_dataset(data, load_schema(schema));
  if (!tasks.empty()) ds = ds.select_tasks(tasks);
  return ds;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  fs::path config, out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto cfg = SynthConfig::from_json(read_json(a.config));
  Run run("synth", a.out);
  run.config(a.config);
  run.seed(cfg.seed);
  const auto result = generate(cfg);
  std::ostringstream csv;
  write_table_csv(result.table, csv);
  run.text("data.csv", csv.str());
  run.json_file("schema.json", schema_to_json(result.table.schema));
  run.json_file("truth.json", result.truth.to_json());
  run.finish();
  out << "wrote " << cfg.n_samples << " samples x " << cfg.n_features << " features, "
      << cfg.n_tasks() << " tasks to " << a.out.string() << '\n';
  return kSuccess;
}

struct PreprocessArgs {
  fs::path data, schema, out;
  double max_missing_frac = 0.8;
  int mice_sweeps = 10;
  double mice_tol = 1e-6;
  bool no_normalize = false;
};

int cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
  const auto schema = load_schema(a.schema);
  Run run("preprocess", a.out);
  run.input(a.data);
  run.input(a.schema);
  const auto raw = load_csv(a.data, schema);
  const auto cleaned = clean(raw, a.max_missing_frac);
  auto table = encode_nominal(cleaned.table);
  if (table.total_missing() > 0) table = mice_impute(table, a.mice_sweeps, a.mice_tol);
  const Dataset ds = transform(decode_categorical(table), !a.no_normalize);

  run.text("data.csv", dataset_csv(ds));
  run.json_file("schema.json", schema_to_json(dataset_schema(ds)));
  run.json_file("cleaning_report.json", cleaned.report.to_json());
  run.json_file("normalization.json",
                {{"feature_names", ds.feature_names},
                 {"stats", stats_to_json(ds.normalization_stats)}});
  run.finish();
  out << "rows " << raw.n_rows() << " -> " << ds.n_samples() << ", features " << ds.n_features()
      << ", dropped columns " << cleaned.report.dropped_columns.size() << ", duplicates removed "
      << cleaned.report.duplicates_removed << '\n';
  return kSuccess;
}

struct TrainArgs {
  fs::path data, schema, config, out;
  std::uint64_t seed = 0;
  std::vector<std::string> tasks;
  int folds = 5;
  int jobs = 1;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  Dataset ds = load_for_training(a.data, a.schema, a.tasks);
  auto cfg = train_config_from_json(read_json(a.config), ds);
  cfg.seed = a.seed;
  Run run("train", a.out);
  run.input(a.data);
  run.input(a.schema);
  run.config(a.config);
  run.seed(a.seed);

  const auto stats = fit_normalization(ds.features);
  ds.features = apply_normalization(ds.features, stats);
  ds.normalization_stats = stats;
  const auto result = train_model(ds, cfg);

  run.json_file("model.json", model_to_json({result.model, stats, ds.feature_names}));
  run.json_file("history.json", history_to_json(result.history, ds.outcomes));
  run.finish();
  const auto& last = result.history.back();
  out << "trained " << cfg.epochs << " epochs; final training loss " << last.total_loss << '\n';
  return kSuccess;
}

int cmd_cv(const TrainArgs& a, std::ostream& out) {
  const Dataset ds = load_for_training(a.data, a.schema, a.tasks);
  auto cfg = train_config_from_json(read_json(a.config), ds);
  cfg.seed = a.seed;
  Run run("cv", a.out);
  run.input(a.data);
  run.input(a.schema);
  run.config(a.config);
  run.seed(a.seed);

  const auto report = cross_validate(ds, cfg, a.folds, a.seed, a.jobs);
  const TableRow row{"MTL (" + std::to_string(a.folds) + "-fold CV)", report.summary};
  const auto table = render_table(std::span(&row, 1));
  run.json_file("cv_report.json", report.to_json());
  run.text("cv_table.txt", table);
  run.finish();
  out << table;
  return kSuccess;
}

struct SearchArgs {
  fs::path data, schema, space, out;
  std::uint64_t seed = 0;
  std::vector<std::string> tasks;
  int folds = 5;
  int jobs = 1;
};

int cmd_gridsearch(const SearchArgs& a, std::ostream& out) {
  const Dataset ds = load_for_training(a.data, a.schema, a.tasks);
  auto space = SearchSpace::from_json(read_json(a.space));
  space.seed = a.seed;
  Run run("gridsearch", a.out);
  run.input(a.data);
  run.input(a.schema);
  run.config(a.space);
  run.seed(a.seed);

  const auto result = grid_search(ds, space, a.folds, a.jobs);
  json trials = json::array();
  for (const auto& t : result.trials) trials.push_back(t.to_json());
  const TableRow row{"MTL (tuned for " + space.primary_task + ")", result.report.summary};
  const auto table = render_table(std::span(&row, 1));
  run.json_file("best_config.json", train_config_to_json(result.best));
  run.json_file("cv_report.json", result.report.to_json());
  run.json_file("trials.json", {{"space", space.to_json()},
                                {"best_trial", result.trials[result.best_trial].index},
                                {"trials", trials}});
  run.text("cv_table.txt", table);
  run.finish();
  out << result.trials.size() << " trials; best is configuration #"
      << result.trials[result.best_trial].index << '\n'
      << table;
  return kSuccess;
}

struct AttributeArgs {
  fs::path model, data, schema, out;
  std::string task;
  std::size_t top = 10;
  std::optional<int> target_class;
  std::string mode = "input";
};

int cmd_attribute(const AttributeArgs& a, std::ostream& out) {
  const auto saved = model_from_json(read_json(a.model));
  Dataset ds = load_dataset(a.data, load_schema(a.schema));
  if (!saved.feature_names.empty() && saved.feature_names != ds.feature_names)
    throw std::invalid_argument("dataset features do not match the model's feature names");
  if (!saved.normalization_stats.empty()) {
    ds.features = apply_normalization(ds.features, saved.normalization_stats);
    ds.normalization_stats = saved.normalization_stats;
  }

  const auto& heads = saved.state.topology.heads;
  std::size_t head = heads.size();
  std::string valid;
  for (std::size_t j = 0; j < heads.size(); ++j) {
    if (heads[j].task_name == a.task) head = j;
    valid += (j ? ", " : "") + heads[j].task_name;
  }
  if (head == heads.size())
    throw std::invalid_argument("unknown task '" + a.task + "'; valid tasks: " + valid);

  const auto mode =
      a.mode == "hidden" ? AttributionMode::hidden_activation : AttributionMode::input_gradient;
  const auto report = grad_cam_features(saved.state, ds, head, a.target_class, mode);
  const auto listing = report.render_top(a.top);  // validates --top before anything is written

  Run run("attribute", a.out);
  run.input(a.model);
  run.input(a.data);
  run.input(a.schema);
  auto j = report.to_json();
  j["mode"] = a.mode;
  run.json_file("attribution.json", j);
  run.text("attribution.txt", listing);
  run.finish();
  out << listing;
  return kSuccess;
}

struct ReportArgs {
  fs::path data, schema, out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const Dataset ds = load_dataset(a.data, load_schema(a.schema));
  Run run("report", a.out);
  run.input(a.data);
  run.input(a.schema);
  const auto report = distribution_report(ds);
  const auto text = render_distribution_report(report);
  run.json_file("report.json", report);
  run.text("report.txt", text);
  run.finish();
  out << text;
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task learning toolkit for tabular outcome prediction", "mtl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset with known ground truth");
  s->add_option("--config", synth.config, "Synthesis config JSON")->required();
  s->add_option("--out", synth.out, "Output directory")->required();

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Clean, impute and transform a raw CSV");
  p->add_option("--data", pre.data, "Raw CSV")->required();
  p->add_option("--schema", pre.schema, "Column schema JSON")->required();
  p->add_option("--out", pre.out, "Output directory")->required();
  p->add_option("--max-missing-frac", pre.max_missing_frac, "Drop columns missing more than this")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  p->add_option("--mice-sweeps", pre.mice_sweeps, "Maximum imputation sweeps")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  p->add_option("--mice-tol", pre.mice_tol, "Imputation convergence tolerance")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  p->add_flag("--no-normalize", pre.no_normalize, "Skip z-scoring (for leakage-safe CV)");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train one model on the whole dataset");
  TrainArgs cv;
  auto* c = app.add_subcommand("cv", "k-fold cross-validation of one configuration");
  for (auto [cmd, a] : {std::pair{t, &train}, std::pair{c, &cv}}) {
    cmd->add_option("--data", a->data, "Model-ready CSV")->required();
    cmd->add_option("--schema", a->schema, "Schema JSON")->required();
    cmd->add_option("--config", a->config, "Training config JSON")->required();
    cmd->add_option("--seed", a->seed, "Random seed")->required();
    cmd->add_option("--out", a->out, "Output directory")->required();
    cmd->add_option("--tasks", a->tasks, "Subset of tasks to model (comma separated)")
        ->delimiter(',');
  }
  c->add_option("--folds", cv.folds, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000000));
  c->add_option("--jobs", cv.jobs, "Folds trained concurrently")->capture_default_str()->check(CLI::PositiveNumber);

  SearchArgs search;
  auto* g = app.add_subcommand("gridsearch", "Hyperparameter search scored by k-fold CV");
  g->add_option("--data", search.data, "Model-ready CSV")->required();
  g->add_option("--schema", search.schema, "Schema JSON")->required();
  g->add_option("--space", search.space, "Search space JSON")->required();
  g->add_option("--seed", search.seed, "Random seed")->required();
  g->add_option("--out", search.out, "Output directory")->required();
  g->add_option("--tasks", search.tasks, "Subset of tasks to model (comma separated)")->delimiter(',');
  g->add_option("--folds", search.folds, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000000));
  g->add_option("--jobs", search.jobs, "Trials run concurrently")->capture_default_str()->check(CLI::PositiveNumber);

  AttributeArgs attr;
  auto* at = app.add_subcommand("attribute", "Rank input features by gradient-based importance");
  at->add_option("--model", attr.model, "Model JSON written by train")->required();
  at->add_option("--data", attr.data, "Model-ready CSV")->required();
  at->add_option("--schema", attr.schema, "Schema JSON")->required();
  at->add_option("--task", attr.task, "Task (head) name")->required();
  at->add_option("--top", attr.top, "Number of features to list")->capture_default_str();
  at->add_option("--target-class", attr.target_class, "Class whose logit is explained (default 1)");
  at->add_option("--mode", attr.mode, "input (default) or hidden (experimental)")
      ->capture_default_str()
      ->check(CLI::IsMember({"input", "hidden"}));
  at->add_option("--out", attr.out, "Output directory")->required();

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Outcome distribution and correlation report");
  r->add_option("--data", rep.data, "Model-ready CSV")->required();
  r->add_option("--schema", rep.schema, "Schema JSON")->required();
  r->add_option("--out", rep.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (p->parsed()) return cmd_preprocess(pre, out);
    if (t->parsed()) return cmd_train(train, out);
    if (c->parsed()) return cmd_cv(cv, out);
    if (g->parsed()) return cmd_gridsearch(search, out);
    if (at->parsed()) return cmd_attribute(attr, out);
    if (r->parsed()) return cmd_report(rep, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}

}  // namespace mtl::cli
