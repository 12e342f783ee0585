#pragma once

#include "chirp/spectral.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace chirp {

/// Class name reserved for negative examples; always ordered last.
inline constexpr std::string_view kPseudoClass = "_pseudo";

struct LabeledSample {
  FeatureVector features;
  std::size_t label = 0;
  std::string clip_path;
};

/// A file that could not be turned into a sample.
struct LoadIssue {
  std::string path;
  std::string message;
};

struct LabeledCorpus {
  std::vector<LabeledSample> samples;
  std::vector<std::string> class_names;
  bool pseudo_present = false;
  std::vector<LoadIssue> issues;

  std::size_t size() const { return samples.size(); }
  std::size_t class_count() const { return class_names.size(); }
  /// Sample indices of each class, in corpus order.
  std::vector<std::vector<std::size_t>> indices_by_class() const;
};

/// Lexicographic order with the pseudo class moved to the end.
std::vector<std::string> order_class_names(std::vector<std::string> names);

struct CorpusEntry {
  std::filesystem::path path;
  std::string label;
};

struct CorpusListing {
  std::vector<CorpusEntry> entries;
  std::vector<std::string> class_names;
};

/// Enumerates a corpus: either a directory with one subdirectory of .wav
/// files per class, or a CSV manifest of `path,label` rows (header optional,
/// relative paths resolved against the manifest's directory).
CorpusListing list_corpus(const std::filesystem::path& root);

/// Lists and extracts every clip. Clips that fail to read or parse are
/// recorded in `issues` and skipped. Throws EmptyCorpus when nothing is listed.
LabeledCorpus load_corpus(const std::filesystem::path& root, const ExtractionConfig& config = {},
                          std::size_t jobs = 1);

/// Feature cache: header `clip_path,label,<28 slot names>`, one row per clip.
void write_feature_cache(std::ostream& out, const LabeledCorpus& corpus);
LabeledCorpus read_feature_cache(std::istream& in);
LabeledCorpus read_feature_cache(const std::filesystem::path& path);

enum class Role { Train, Test, Eval };
std::string_view role_name(Role role);

/// Train/test/eval membership as index sets into a corpus.
struct SplitPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> eval;

  const std::vector<std::size_t>& members(Role role) const;
};

struct FoldPlan {
  std::vector<SplitPlan> folds;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// Largest-remainder allocation of `count` items to train/test/eval in the
/// ratio 7:1:2. Ties in the remainder go to the earlier role.
std::array<std::size_t, 3> allocate_roles(std::size_t count);

/// One stratified 70/10/20 split. Throws ClassTooSmall when a class has
/// fewer than 3 samples.
SplitPlan plan_split(const LabeledCorpus& corpus, std::uint64_t seed);

/// Rotating cross-validation folds. Within each class the samples are
/// shuffled once into a ring; fold i starts its eval block at offset
/// floor(i * size / fold_count), the test block follows it, and the rest is
/// training data. Classes smaller than fold_count produce a warning.
FoldPlan plan_folds(const LabeledCorpus& corpus, std::uint64_t seed, std::size_t fold_count = 10);

/// Audit export: `clip_path,fold,role`.
void write_fold_plan(std::ostream& out, const LabeledCorpus& corpus, const FoldPlan& plan);

}  // namespace chirp
