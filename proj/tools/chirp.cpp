// chirp: vocalization corpus -> features -> trained classifier -> reports.
//
//   chirp extract  --corpus DIR|MANIFEST --cache features.csv
//   chirp select   --cache features.csv --trace trace.csv --subset subset.txt --seed 7
//   chirp train    --cache features.csv --model model.json --report report.txt --seed 7
//   chirp evaluate --model model.json --cache features.csv
//   chirp classify --model model.json clip.wav
//
// Every subcommand also reads `--config FILE` (key = value lines); flags on
// the command line win over the file.

#include "chirp/csv.hpp"
#include "chirp/dataset.hpp"
#include "chirp/eval.hpp"
#include "chirp/experiment.hpp"
#include "chirp/model.hpp"
#include "chirp/selection.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace chirp;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kUnreadableInput = 2,
  kClassTooSmall = 3,
  kUnparseableClip = 4,
  kDimensionMismatch = 5,
};

struct ExtractOptions {
  std::size_t window = 512;
  std::size_t hop = 256;
  int rate = 22050;

  ExtractionConfig config() const {
    ExtractionConfig c;
    c.window = window;
    c.hop = hop;
    c.sample_rate = rate;
    return c;
  }
};

struct TrainOptions {
  std::size_t hidden = 0;
  std::size_t layers = 1;
  TrainingConfig training;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  bool ci = false;
};

struct RunConfig {
  std::string corpus;
  std::string cache;
  std::string model;
  std::string report;
  std::string report_csv;
  std::string trace;
  std::string subset;
  std::string splits;
  std::string quartiles;
  std::string input;
  double threshold = kHypothesisThreshold;
  ExtractOptions extract;
  TrainOptions train;
};

void add_extraction_options(CLI::App* cmd, ExtractOptions& o) {
  cmd->add_option("--window", o.window, "Analysis window in samples (power of two)")->capture_default_str();
  cmd->add_option("--hop", o.hop, "Hop between windows in samples")->capture_default_str();
  cmd->add_option("--rate", o.rate, "Common sample rate in Hz")->capture_default_str();
}

void add_training_options(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--hidden", o.hidden, "Hidden layer width k (0 = number of classes)")->capture_default_str();
  cmd->add_option("--layers", o.layers, "Hidden layer count m")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--lr", o.training.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--momentum", o.training.momentum, "Momentum in [0, 1)")->capture_default_str();
  cmd->add_option("--max-epochs", o.training.max_epochs, "Epoch cap")->capture_default_str();
  cmd->add_option("--patience", o.training.test_patience, "Epochs of test-MSE worsening tolerated")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed (required with --ci)");
  cmd->add_option("--jobs", o.jobs, "Concurrent trainings")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_flag("--ci", o.ci, "Refuse to run without an explicit --seed");
}

int fail(int code, const std::string& message) {
  std::cerr << "chirp: " << message << '\n';
  return code;
}

bool seed_ready(TrainOptions& o) {
  if (o.seed) {
    o.training.seed = *o.seed;
    return true;
  }
  return !o.ci && std::getenv("CHIRP_CI") == nullptr;
}

template <typename Write>
void write_file(const std::string& path, Write&& write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
  out.flush();
  if (!out) throw std::runtime_error("error writing " + path);
}

std::optional<LabeledCorpus> load_cache(const std::string& path, int& code) {
  try {
    return read_feature_cache(fs::path(path));
  } catch (const Error& e) {
    code = fail(kUnreadableInput, e.what());
    return std::nullopt;
  }
}

std::vector<std::size_t> load_subset(const std::string& path) {
  if (path.empty()) return all_slots();
  std::ifstream in(path);
  if (!in) throw DimensionMismatch("cannot open subset file " + path);
  return read_subset(in);
}

int run_extract(const RunConfig& cfg) {
  LabeledCorpus corpus;
  try {
    corpus = load_corpus(cfg.corpus, cfg.extract.config(), cfg.train.jobs);
  } catch (const Error& e) {
    return fail(kUnreadableInput, e.what());
  }
  for (const auto& issue : corpus.issues) std::cerr << "warning: skipped " << issue.path << ": " << issue.message << '\n';
  if (corpus.samples.empty()) return fail(kUnreadableInput, "no clip could be extracted");

  write_file(cfg.cache, [&](std::ostream& out) { write_feature_cache(out, corpus); });
  std::cerr << "extracted " << corpus.samples.size() << " of " << corpus.samples.size() + corpus.issues.size()
            << " clips into " << cfg.cache << '\n';
  return kOk;
}

int run_select(RunConfig cfg) {
  if (!seed_ready(cfg.train)) return fail(kUsage, "--seed is mandatory in CI mode");
  int code = kOk;
  auto corpus = load_cache(cfg.cache, code);
  if (!corpus) return code;

  try {
    const FoldPlan plan = plan_folds(*corpus, cfg.train.training.seed);
    for (const auto& w : plan.warnings) std::cerr << "warning: " << w << '\n';
    const Geometry geometry{cfg.train.hidden, cfg.train.layers};
    const auto trace = forward_select(*corpus, plan, geometry, cfg.train.training, cfg.train.jobs);

    if (!cfg.trace.empty()) write_file(cfg.trace, [&](std::ostream& out) { write_selection_trace(out, trace); });
    if (!cfg.subset.empty()) write_file(cfg.subset, [&](std::ostream& out) { write_subset(out, trace.final_subset); });

    const auto spec = geometry.spec_for(trace.final_subset.size(), corpus->class_count());
    std::cout << "selected " << spec.to_string() << ":";
    for (std::size_t s : trace.final_subset) std::cout << ' ' << slot_names()[s];
    std::cout << "\nmdl " << csv::format_double(trace.final_mdl) << '\n';
  } catch (const ClassTooSmall& e) {
    return fail(kClassTooSmall, e.what());
  }
  return kOk;
}

int run_train(RunConfig cfg) {
  if (!seed_ready(cfg.train)) return fail(kUsage, "--seed is mandatory in CI mode");
  int code = kOk;
  auto corpus = load_cache(cfg.cache, code);
  if (!corpus) return code;

  std::vector<std::size_t> slots;
  try {
    slots = load_subset(cfg.subset);
  } catch (const Error& e) {
    return fail(kDimensionMismatch, e.what());
  }

  FoldPlan plan;
  try {
    plan = plan_folds(*corpus, cfg.train.training.seed);
  } catch (const ClassTooSmall& e) {
    return fail(kClassTooSmall, e.what());
  }
  for (const auto& w : plan.warnings) std::cerr << "warning: " << w << '\n';
  if (!cfg.splits.empty()) write_file(cfg.splits, [&](std::ostream& out) { write_fold_plan(out, *corpus, plan); });

  const Geometry geometry{cfg.train.hidden, cfg.train.layers};
  const auto cv = cross_validate(*corpus, plan, slots, geometry, cfg.train.training, cfg.train.jobs, cfg.threshold);
  const auto& best = cv.folds[cv.best_fold];

  Model model{best.network, cfg.extract.config(), cfg.train.training.seed + cv.best_fold, best.state.stop_reason};
  write_file(cfg.model, [&](std::ostream& out) { write_model(out, model); });

  std::ostringstream text;
  text << "Network " << best.network.spec.to_string() << ", " << plan.folds.size() << " folds, seed "
       << cfg.train.training.seed << "\n\n";
  text << "fold  train  test  eval  epochs  stop            accuracy(%)\n";
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    const auto& o = cv.folds[f];
    char line[128];
    std::snprintf(line, sizeof line, "%4zu  %5zu  %4zu  %4zu  %6zu  %-14s  %11.2f\n", f + 1, plan.folds[f].train.size(),
                  plan.folds[f].test.size(), plan.folds[f].eval.size(), o.state.epochs_run,
                  std::string(stop_reason_name(o.state.stop_reason)).c_str(), o.report.overall_accuracy);
    text << line;
  }
  text << '\n';
  write_cross_fold_text(text, cv.summary);
  text << "\nExported fold " << cv.best_fold + 1 << '\n';
  write_report_text(text, best.report);

  if (cfg.report.empty()) std::cout << text.str();
  else write_file(cfg.report, [&](std::ostream& out) { out << text.str(); });
  if (!cfg.report_csv.empty())
    write_file(cfg.report_csv, [&](std::ostream& out) { write_report_csv(out, cv.summary.pooled); });
  return kOk;
}

int run_evaluate(const RunConfig& cfg) {
  Model model;
  try {
    model = read_model(fs::path(cfg.model));
  } catch (const Error& e) {
    return fail(kUnreadableInput, e.what());
  }
  int code = kOk;
  auto corpus = load_cache(cfg.cache, code);
  if (!corpus) return code;

  const auto& net = model.network;
  std::vector<std::size_t> truths;
  std::vector<std::size_t> predictions;
  for (const auto& s : corpus->samples) {
    const auto& name = corpus->class_names[s.label];
    const auto it = std::find(net.labels.begin(), net.labels.end(), name);
    if (it == net.labels.end()) {
      std::cerr << "warning: " << s.clip_path << " has label '" << name << "' unknown to the model\n";
      continue;
    }
    truths.push_back(static_cast<std::size_t>(it - net.labels.begin()));
    predictions.push_back(classify(net, select_inputs(s.features, net.input_slots)).index);
  }
  if (truths.empty()) return fail(kUnreadableInput, "no sample carries a label the model knows");

  const auto report = summarize(confusion_matrix(truths, predictions, net.spec.outputs, net.labels), cfg.threshold);
  std::ostringstream text;
  write_report_text(text, report);
  if (cfg.report.empty()) std::cout << text.str();
  else write_file(cfg.report, [&](std::ostream& out) { out << text.str(); });
  if (!cfg.report_csv.empty()) write_file(cfg.report_csv, [&](std::ostream& out) { write_report_csv(out, report); });
  if (!cfg.quartiles.empty())
    write_file(cfg.quartiles, [&](std::ostream& out) { write_feature_summary_csv(out, feature_summary(*corpus)); });
  return kOk;
}

void print_classification(const Network& net, const Classification<double>& c) {
  std::cout << net.labels.at(c.index) << '\n';
  for (std::size_t k = 0; k < net.labels.size(); ++k) {
    char value[32];
    std::snprintf(value, sizeof value, "%.4f", c.activations[static_cast<Eigen::Index>(k)]);
    std::cout << "  " << net.labels[k] << ' ' << value << '\n';
  }
}

int run_classify(const RunConfig& cfg) {
  Model model;
  try {
    model = read_model(fs::path(cfg.model));
  } catch (const Error& e) {
    return fail(kUnreadableInput, e.what());
  }
  const auto& net = model.network;
  if (net.labels.size() != net.spec.outputs) return fail(kUnreadableInput, "model carries no class labels");

  const fs::path input = cfg.input;
  if (input.extension() == ".csv") {
    int code = kOk;
    auto rows = load_cache(cfg.input, code);
    if (!rows) return code;
    for (const auto& s : rows->samples) {
      Classification<double> c;
      try {
        c = classify(net, select_inputs(s.features, net.input_slots));
      } catch (const DimensionMismatch& e) {
        return fail(kDimensionMismatch, e.what());
      }
      std::cout << s.clip_path << ": ";
      print_classification(net, c);
    }
    return kOk;
  }

  FeatureVector features;
  try {
    features = extract_features(read_wav(input), model.extraction);
  } catch (const Error& e) {
    return fail(kUnparseableClip, e.what());
  }
  try {
    print_classification(net, classify(net, select_inputs(features, net.input_slots)));
  } catch (const DimensionMismatch& e) {
    return fail(kDimensionMismatch, e.what());
  }
  return kOk;
}

/// Splices `key = value` lines from the file named by `--config` in front of
/// the subcommand's own arguments. Options keep their last value, so flags
/// given on the command line override the file.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  const auto sub = std::find_if(args.begin() + 1, args.end(), [](const std::string& a) { return a.empty() || a[0] != '-'; });
  if (sub == args.end()) return args;

  std::string path;
  for (auto it = sub + 1; it != args.end(); ++it) {
    if (*it == "--config" && it + 1 != args.end()) path = *(it + 1);
    else if (it->rfind("--config=", 0) == 0) path = it->substr(9);
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  auto trim = [](std::string v) {
    const auto first = v.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    v = v.substr(first, v.find_last_not_of(" \t\r") - first + 1);
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
    return v;
  };
  std::vector<std::string> injected;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw CLI::ConversionError(path + ":" + std::to_string(n) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key == "config") continue;
    injected.push_back("--" + key + "=" + trim(body.substr(eq + 1)));
  }
  args.insert(sub + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Animal vocalization identification with spectral features and sigmoid networks"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  RunConfig cfg;
  std::string config_file;

  auto* extract = app.add_subcommand("extract", "Compute the 28 spectral features of every clip in a corpus");
  extract->add_option("--config", config_file, "key = value file; command-line flags take precedence");
  extract->add_option("--corpus", cfg.corpus, "Class-per-directory root or path,label manifest")->required();
  extract->add_option("--cache", cfg.cache, "Feature cache CSV to write")->required();
  extract->add_option("--jobs", cfg.train.jobs, "Concurrent extractions")->check(CLI::PositiveNumber);
  add_extraction_options(extract, cfg.extract);

  auto* select = app.add_subcommand("select", "Forward feature selection under minimum description length");
  select->add_option("--config", config_file, "key = value file; command-line flags take precedence");
  select->add_option("--cache", cfg.cache, "Feature cache CSV")->required();
  select->add_option("--trace", cfg.trace, "Selection trace CSV to write");
  select->add_option("--subset", cfg.subset, "Selected slot list to write");
  add_training_options(select, cfg.train);

  auto* train = app.add_subcommand("train", "Ten-fold training; exports the best fold's network");
  train->add_option("--config", config_file, "key = value file; command-line flags take precedence");
  train->add_option("--cache", cfg.cache, "Feature cache CSV")->required();
  train->add_option("--model", cfg.model, "Model JSON to write")->required();
  train->add_option("--report", cfg.report, "Text report (stdout when omitted)");
  train->add_option("--report-csv", cfg.report_csv, "Pooled confusion matrix as CSV");
  train->add_option("--subset", cfg.subset, "Slot list from `select` (all 28 when omitted)");
  train->add_option("--splits", cfg.splits, "Fold membership CSV to write");
  train->add_option("--threshold", cfg.threshold, "Accuracy (%) the hypothesis check requires")->capture_default_str();
  add_training_options(train, cfg.train);
  add_extraction_options(train, cfg.extract);

  auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix of a model over a feature cache");
  evaluate->add_option("--config", config_file, "key = value file; command-line flags take precedence");
  evaluate->add_option("--model", cfg.model, "Model JSON")->required();
  evaluate->add_option("--cache", cfg.cache, "Feature cache CSV")->required();
  evaluate->add_option("--report", cfg.report, "Text report (stdout when omitted)");
  evaluate->add_option("--report-csv", cfg.report_csv, "Report as CSV");
  evaluate->add_option("--quartiles", cfg.quartiles, "Per-class five-number summaries CSV");
  evaluate->add_option("--threshold", cfg.threshold, "Accuracy (%) the hypothesis check requires")
      ->capture_default_str();

  auto* classify_cmd = app.add_subcommand("classify", "Identify the species of one clip");
  classify_cmd->add_option("--config", config_file, "key = value file; command-line flags take precedence");
  classify_cmd->add_option("--model", cfg.model, "Model JSON")->required();
  classify_cmd->add_option("input", cfg.input, "WAV clip, or a feature cache CSV")->required();

  try {
    std::vector<std::string> args = expand_config(std::vector<std::string>(argv, argv + argc));
    std::vector<const char*> raw;
    for (const auto& a : args) raw.push_back(a.c_str());
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (extract->parsed()) return run_extract(cfg);
    if (select->parsed()) return run_select(cfg);
    if (train->parsed()) return run_train(cfg);
    if (evaluate->parsed()) return run_evaluate(cfg);
    if (classify_cmd->parsed()) return run_classify(cfg);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  return kUsage;
}
