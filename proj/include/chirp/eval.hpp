#pragma once

#include "chirp/dataset.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace chirp {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  CountMatrix counts;
  std::vector<std::string> class_names;

  std::size_t class_count() const { return static_cast<std::size_t>(counts.rows()); }
  std::int64_t total() const { return counts.sum(); }
  std::int64_t correct() const { return counts.trace(); }
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> truths, std::span<const std::size_t> predictions,
                                 std::size_t classes, std::vector<std::string> class_names = {});

struct ClassBreakdown {
  std::int64_t true_positives = 0;
  std::int64_t false_positives = 0;
  double false_positive_rate = 0.0;  // percent of all evaluated samples
};

struct EvalReport {
  ConfusionMatrix matrix;
  double overall_accuracy = 0.0;    // percent
  double overall_error_rate = 0.0;  // percent
  std::vector<ClassBreakdown> per_class;
  double threshold = 70.0;
  bool hypothesis_pass = false;
};

inline constexpr double kHypothesisThreshold = 70.0;

/// Accuracy = 100 * trace / total; per-class false-positive rate uses the
/// total sample count as denominator. Throws EmptyMatrix when total is 0.
EvalReport summarize(const ConfusionMatrix& matrix, double threshold = kHypothesisThreshold);

struct CrossFoldReport {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;
  std::vector<double> fold_accuracies;
  EvalReport pooled;  // summary of the cell-wise summed matrix
};

CrossFoldReport cross_fold_report(std::span<const EvalReport> folds, double threshold = kHypothesisThreshold);

/// Rounds a percentage to two decimals, the precision reports print.
double round2(double percent);

/// Aligned text table: one row per true class with a final "Total Correct"
/// column, followed by overall error rate and accuracy.
void write_report_text(std::ostream& out, const EvalReport& report);
/// `true_class,<predicted classes...>,total_correct`, then per-class rows of
/// `class,tp,fp,fp_rate` and the overall figures.
void write_report_csv(std::ostream& out, const EvalReport& report);
void write_cross_fold_text(std::ostream& out, const CrossFoldReport& report);

struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Median-exclusive quartiles: Q1 and Q3 are medians of the halves below and
/// above the median position. A single value yields five equal numbers.
FiveNumber five_number_summary(std::vector<double> values);

struct FeatureSummary {
  std::vector<std::string> class_names;
  /// [class][slot]
  std::vector<std::array<FiveNumber, kSlotCount>> classes;
};

FeatureSummary feature_summary(const LabeledCorpus& corpus);

/// Ordered class pairs (a, b) with min(a) > max(b) on `slot`: the slot alone
/// separates them.
std::vector<std::pair<std::size_t, std::size_t>> separable_pairs(const FeatureSummary& summary, std::size_t slot);

/// `class,slot,slot_name,min,q1,median,q3,max`
void write_feature_summary_csv(std::ostream& out, const FeatureSummary& summary);

}  // namespace chirp
