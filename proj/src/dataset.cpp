#include "chirp/dataset.hpp"

#include "chirp/csv.hpp"
#include "chirp/error.hpp"
#include "chirp/parallel.hpp"
#include "chirp/random.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace chirp {
namespace {

bool is_wav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

std::optional<double> parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

CorpusListing list_directory(const fs::path& root) {
  CorpusListing listing;
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end());

  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && is_wav(entry.path())) files.push_back(entry.path());
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    const std::string label = dir.filename().string();
    listing.class_names.push_back(label);
    for (auto& f : files) listing.entries.push_back({std::move(f), label});
  }
  return listing;
}

CorpusListing list_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw EmptyCorpus("cannot open manifest " + manifest.string());
  const fs::path base = manifest.parent_path();

  CorpusListing listing;
  std::set<std::string> labels;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    if (first) {
      first = false;
      if (fields.size() >= 2 && fields[0] == "path" && fields[1] == "label") continue;
    }
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) continue;
    fs::path p = fields[0];
    if (p.is_relative()) p = base / p;
    labels.insert(fields[1]);
    listing.entries.push_back({std::move(p), fields[1]});
  }
  listing.class_names.assign(labels.begin(), labels.end());
  return listing;
}

}  // namespace

std::vector<std::vector<std::size_t>> LabeledCorpus::indices_by_class() const {
  std::vector<std::vector<std::size_t>> out(class_names.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[samples[i].label].push_back(i);
  return out;
}

std::vector<std::string> order_class_names(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  auto pseudo = std::find(names.begin(), names.end(), kPseudoClass);
  if (pseudo != names.end()) std::rotate(pseudo, pseudo + 1, names.end());
  return names;
}

CorpusListing list_corpus(const fs::path& root) {
  CorpusListing listing;
  if (fs::is_directory(root)) listing = list_directory(root);
  else if (fs::is_regular_file(root)) listing = list_manifest(root);
  else throw EmptyCorpus(root.string() + " is neither a directory nor a manifest");

  if (listing.entries.empty()) throw EmptyCorpus("no clips found under " + root.string());
  listing.class_names = order_class_names(std::move(listing.class_names));
  return listing;
}

LabeledCorpus load_corpus(const fs::path& root, const ExtractionConfig& config, std::size_t jobs) {
  const CorpusListing listing = list_corpus(root);
  config.validate();

  LabeledCorpus corpus;
  corpus.class_names = listing.class_names;
  corpus.pseudo_present =
      std::find(corpus.class_names.begin(), corpus.class_names.end(), kPseudoClass) != corpus.class_names.end();

  std::map<std::string, std::size_t> label_of;
  for (std::size_t i = 0; i < corpus.class_names.size(); ++i) label_of[corpus.class_names[i]] = i;

  const std::size_t n = listing.entries.size();
  std::vector<std::optional<FeatureVector>> features(n);
  std::vector<std::string> errors(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto& entry = listing.entries[i];
    try {
      if (!fs::is_regular_file(entry.path)) throw UnreadableClip(entry.path.string() + " is not a file");
      features[i] = extract_features(read_wav(entry.path), config);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  // Issues and samples are collected in listing order for reproducibility.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& entry = listing.entries[i];
    if (!features[i]) {
      corpus.issues.push_back({entry.path.string(), errors[i]});
      continue;
    }
    corpus.samples.push_back({*features[i], label_of.at(entry.label), entry.path.string()});
  }
  return corpus;
}

void write_feature_cache(std::ostream& out, const LabeledCorpus& corpus) {
  out << "clip_path,label";
  for (const auto& name : slot_names()) out << ',' << name;
  out << '\n';
  for (const auto& s : corpus.samples) {
    out << csv::escape(s.clip_path) << ',' << csv::escape(corpus.class_names[s.label]);
    for (std::size_t slot = 0; slot < kSlotCount; ++slot) out << ',' << csv::format_double(s.features[slot]);
    out << '\n';
  }
}

LabeledCorpus read_feature_cache(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedCache("empty feature cache");
  const auto header = csv::split(line);
  if (header.size() != kSlotCount + 2 || header[0] != "clip_path" || header[1] != "label")
    throw MalformedCache("unexpected header");
  for (std::size_t slot = 0; slot < kSlotCount; ++slot)
    if (header[slot + 2] != slot_names()[slot])
      throw MalformedCache("column " + std::to_string(slot + 2) + " is '" + header[slot + 2] + "', expected '" +
                           slot_names()[slot] + "'");

  struct Row {
    std::string path;
    std::string label;
    FeatureVector features;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    if (fields.size() != kSlotCount + 2)
      throw MalformedCache("line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) + " fields");
    Row row{fields[0], fields[1], {}};
    for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
      const auto v = parse_double(fields[slot + 2]);
      if (!v) throw MalformedCache("line " + std::to_string(line_no) + ": bad number '" + fields[slot + 2] + "'");
      row.features[slot] = *v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyCorpus("feature cache has no rows");

  std::vector<std::string> labels;
  for (const auto& r : rows) labels.push_back(r.label);

  LabeledCorpus corpus;
  corpus.class_names = order_class_names(std::move(labels));
  corpus.pseudo_present = corpus.class_names.back() == kPseudoClass;
  std::map<std::string, std::size_t> label_of;
  for (std::size_t i = 0; i < corpus.class_names.size(); ++i) label_of[corpus.class_names[i]] = i;
  for (auto& r : rows) corpus.samples.push_back({r.features, label_of.at(r.label), std::move(r.path)});
  return corpus;
}

LabeledCorpus read_feature_cache(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedCache("cannot open " + path.string());
  return read_feature_cache(in);
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::Train: return "train";
    case Role::Test: return "test";
    case Role::Eval: return "eval";
  }
  return "?";
}

const std::vector<std::size_t>& SplitPlan::members(Role role) const {
  switch (role) {
    case Role::Train: return train;
    case Role::Test: return test;
    case Role::Eval: break;
  }
  return eval;
}

std::array<std::size_t, 3> allocate_roles(std::size_t count) {
  // Tenths keep the quotas exact.
  constexpr std::array<std::size_t, 3> tenths = {7, 1, 2};
  std::array<std::size_t, 3> out{};
  std::array<std::size_t, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    out[r] = count * tenths[r] / 10;
    remainder[r] = count * tenths[r] % 10;
    assigned += out[r];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) ++out[order[i]];
  return out;
}

SplitPlan plan_split(const LabeledCorpus& corpus, std::uint64_t seed) {
  Rng rng(seed);
  SplitPlan plan;
  const auto by_class = corpus.indices_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto ids = by_class[c];
    if (ids.size() < 3)
      throw ClassTooSmall("class '" + corpus.class_names[c] + "' has " + std::to_string(ids.size()) +
                          " samples; at least 3 are needed");
    rng.shuffle(std::span(ids));
    const auto quota = allocate_roles(ids.size());
    auto it = ids.begin();
    plan.train.insert(plan.train.end(), it, it + static_cast<std::ptrdiff_t>(quota[0]));
    it += static_cast<std::ptrdiff_t>(quota[0]);
    plan.test.insert(plan.test.end(), it, it + static_cast<std::ptrdiff_t>(quota[1]));
    it += static_cast<std::ptrdiff_t>(quota[1]);
    plan.eval.insert(plan.eval.end(), it, ids.end());
  }
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.test.begin(), plan.test.end());
  std::sort(plan.eval.begin(), plan.eval.end());
  return plan;
}

FoldPlan plan_folds(const LabeledCorpus& corpus, std::uint64_t seed, std::size_t fold_count) {
  if (fold_count == 0) throw std::invalid_argument("fold count must be positive");
  Rng rng(seed);
  FoldPlan plan;
  plan.seed = seed;
  plan.folds.resize(fold_count);

  const auto by_class = corpus.indices_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto ring = by_class[c];
    const std::size_t size = ring.size();
    if (size < 3)
      throw ClassTooSmall("class '" + corpus.class_names[c] + "' has " + std::to_string(size) +
                          " samples; at least 3 are needed");
    if (size < fold_count)
      plan.warnings.push_back("class '" + corpus.class_names[c] + "' has " + std::to_string(size) +
                              " samples; some folds share eval sets");
    rng.shuffle(std::span(ring));
    const auto quota = allocate_roles(size);

    for (std::size_t fold = 0; fold < fold_count; ++fold) {
      const std::size_t offset = fold * size / fold_count;
      auto& split = plan.folds[fold];
      for (std::size_t k = 0; k < size; ++k) {
        const std::size_t id = ring[(offset + k) % size];
        if (k < quota[2]) split.eval.push_back(id);
        else if (k < quota[2] + quota[1]) split.test.push_back(id);
        else split.train.push_back(id);
      }
    }
  }
  for (auto& split : plan.folds) {
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.eval.begin(), split.eval.end());
  }
  return plan;
}

void write_fold_plan(std::ostream& out, const LabeledCorpus& corpus, const FoldPlan& plan) {
  out << "clip_path,fold,role\n";
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    std::vector<std::pair<std::size_t, Role>> rows;
    for (Role role : {Role::Train, Role::Test, Role::Eval})
      for (std::size_t id : plan.folds[f].members(role)) rows.emplace_back(id, role);
    std::sort(rows.begin(), rows.end());
    for (const auto& [id, role] : rows)
      out << csv::escape(corpus.samples[id].clip_path) << ',' << f + 1 << ',' << role_name(role) << '\n';
  }
}

}  // namespace chirp
