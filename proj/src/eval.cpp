#include "chirp/eval.hpp"

#include "chirp/csv.hpp"
#include "chirp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace chirp {
namespace {

std::string fixed2(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

double median_of(std::span<const double> sorted) {
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const std::size_t> truths, std::span<const std::size_t> predictions,
                                 std::size_t classes, std::vector<std::string> class_names) {
  if (truths.size() != predictions.size())
    throw std::invalid_argument("truth and prediction sequences differ in length");
  ConfusionMatrix m;
  const auto n = static_cast<Eigen::Index>(classes);
  m.counts = CountMatrix::Zero(n, n);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] >= classes || predictions[i] >= classes)
      throw LabelOutOfRange("pair " + std::to_string(i) + " (" + std::to_string(truths[i]) + ", " +
                            std::to_string(predictions[i]) + ") outside " + std::to_string(classes) + " classes");
    ++m.counts(static_cast<Eigen::Index>(truths[i]), static_cast<Eigen::Index>(predictions[i]));
  }
  if (class_names.empty())
    for (std::size_t c = 0; c < classes; ++c) class_names.push_back("class" + std::to_string(c));
  m.class_names = std::move(class_names);
  return m;
}

EvalReport summarize(const ConfusionMatrix& matrix, double threshold) {
  const std::int64_t total = matrix.total();
  if (total <= 0) throw EmptyMatrix("confusion matrix holds no samples");

  EvalReport r;
  r.matrix = matrix;
  r.threshold = threshold;
  r.overall_accuracy = 100.0 * static_cast<double>(matrix.correct()) / static_cast<double>(total);
  r.overall_error_rate = 100.0 - r.overall_accuracy;
  r.hypothesis_pass = r.overall_accuracy >= threshold;

  const auto column_sums = matrix.counts.colwise().sum();
  for (Eigen::Index c = 0; c < matrix.counts.cols(); ++c) {
    ClassBreakdown b;
    b.true_positives = matrix.counts(c, c);
    b.false_positives = column_sums(c) - b.true_positives;
    b.false_positive_rate = 100.0 * static_cast<double>(b.false_positives) / static_cast<double>(total);
    r.per_class.push_back(b);
  }
  return r;
}

CrossFoldReport cross_fold_report(std::span<const EvalReport> folds, double threshold) {
  if (folds.empty()) throw EmptyMatrix("no fold reports");
  CrossFoldReport out;
  ConfusionMatrix pooled{CountMatrix::Zero(folds[0].matrix.counts.rows(), folds[0].matrix.counts.cols()),
                         folds[0].matrix.class_names};
  for (const auto& f : folds) {
    if (f.matrix.counts.rows() != pooled.counts.rows())
      throw std::invalid_argument("fold reports disagree on class count");
    pooled.counts += f.matrix.counts;
    out.fold_accuracies.push_back(f.overall_accuracy);
  }
  const Eigen::Map<const Eigen::VectorXd> acc(out.fold_accuracies.data(),
                                              static_cast<Eigen::Index>(out.fold_accuracies.size()));
  out.mean_accuracy = acc.mean();
  out.std_accuracy = std::sqrt((acc.array() - out.mean_accuracy).square().mean());
  out.min_accuracy = acc.minCoeff();
  out.max_accuracy = acc.maxCoeff();
  out.pooled = summarize(pooled, threshold);
  return out;
}

double round2(double percent) { return std::round(percent * 100.0) / 100.0; }

void write_report_text(std::ostream& out, const EvalReport& report) {
  const auto& m = report.matrix;
  const std::size_t n = m.class_count();
  std::size_t label_width = std::string("False positive rate (%)").size();
  for (const auto& name : m.class_names) label_width = std::max(label_width, name.size());
  std::vector<std::size_t> widths(n);
  for (std::size_t c = 0; c < n; ++c) widths[c] = std::max<std::size_t>(m.class_names[c].size(), 5);
  const std::string total_header = "Total Correct";

  out << std::left << std::setw(static_cast<int>(label_width)) << "True \\ Predicted";
  for (std::size_t c = 0; c < n; ++c) out << "  " << std::right << std::setw(static_cast<int>(widths[c])) << m.class_names[c];
  out << "  " << total_header << '\n';

  for (std::size_t t = 0; t < n; ++t) {
    out << std::left << std::setw(static_cast<int>(label_width)) << m.class_names[t];
    for (std::size_t p = 0; p < n; ++p)
      out << "  " << std::right << std::setw(static_cast<int>(widths[p]))
          << m.counts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(p));
    out << "  " << std::right << std::setw(static_cast<int>(total_header.size()))
        << m.counts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t)) << '\n';
  }
  out << std::left << std::setw(static_cast<int>(label_width)) << "False positive rate (%)";
  for (std::size_t c = 0; c < n; ++c)
    out << "  " << std::right << std::setw(static_cast<int>(widths[c])) << fixed2(report.per_class[c].false_positive_rate);
  out << "  " << std::right << std::setw(static_cast<int>(total_header.size())) << m.correct() << '\n';
  out << std::left << std::setw(static_cast<int>(label_width)) << "Overall error rate (%)" << "  "
      << fixed2(report.overall_error_rate) << '\n';
  out << std::left << std::setw(static_cast<int>(label_width)) << "Overall accuracy (%)" << "  "
      << fixed2(report.overall_accuracy) << '\n';
  out << "Hypothesis (accuracy >= " << fixed2(report.threshold) << "%): " << (report.hypothesis_pass ? "pass" : "fail")
      << '\n';
  out << std::right;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  const auto& m = report.matrix;
  out << "true_class";
  for (const auto& name : m.class_names) out << ',' << csv::escape(name);
  out << ",total_correct\n";
  for (std::size_t t = 0; t < m.class_count(); ++t) {
    out << csv::escape(m.class_names[t]);
    for (std::size_t p = 0; p < m.class_count(); ++p)
      out << ',' << m.counts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(p));
    out << ',' << m.counts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t)) << '\n';
  }
  out << "\nclass,true_positives,false_positives,false_positive_rate\n";
  for (std::size_t c = 0; c < m.class_count(); ++c) {
    const auto& b = report.per_class[c];
    out << csv::escape(m.class_names[c]) << ',' << b.true_positives << ',' << b.false_positives << ','
        << fixed2(b.false_positive_rate) << '\n';
  }
  out << "\nmetric,value\n";
  out << "total," << m.total() << '\n';
  out << "correct," << m.correct() << '\n';
  out << "overall_accuracy," << fixed2(report.overall_accuracy) << '\n';
  out << "overall_error_rate," << fixed2(report.overall_error_rate) << '\n';
  out << "hypothesis_pass," << (report.hypothesis_pass ? "true" : "false") << '\n';
}

void write_cross_fold_text(std::ostream& out, const CrossFoldReport& report) {
  out << "Fold accuracies (%):";
  for (double a : report.fold_accuracies) out << ' ' << fixed2(a);
  out << "\nMean accuracy (%): " << fixed2(report.mean_accuracy) << "  std " << fixed2(report.std_accuracy) << "  min "
      << fixed2(report.min_accuracy) << "  max " << fixed2(report.max_accuracy) << "\n\nPooled confusion matrix\n";
  write_report_text(out, report.pooled);
}

FiveNumber five_number_summary(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("five-number summary of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  FiveNumber s;
  s.min = values.front();
  s.max = values.back();
  s.median = median_of(values);
  if (n == 1) {
    s.q1 = s.q3 = values.front();
    return s;
  }
  const std::span<const double> all(values);
  const std::size_t half = n / 2;
  s.q1 = median_of(all.first(half));
  s.q3 = median_of(all.last(half));
  return s;
}

FeatureSummary feature_summary(const LabeledCorpus& corpus) {
  if (corpus.samples.empty()) throw EmptyCorpus("feature summary of an empty corpus");
  FeatureSummary out;
  const auto by_class = corpus.indices_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) continue;
    out.class_names.push_back(corpus.class_names[c]);
    std::array<FiveNumber, kSlotCount> slots;
    for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
      std::vector<double> v;
      v.reserve(by_class[c].size());
      for (std::size_t id : by_class[c]) v.push_back(corpus.samples[id].features[slot]);
      slots[slot] = five_number_summary(std::move(v));
    }
    out.classes.push_back(slots);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> separable_pairs(const FeatureSummary& summary, std::size_t slot) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < summary.classes.size(); ++a)
    for (std::size_t b = 0; b < summary.classes.size(); ++b)
      if (a != b && summary.classes[a][slot].min > summary.classes[b][slot].max) out.emplace_back(a, b);
  return out;
}

void write_feature_summary_csv(std::ostream& out, const FeatureSummary& summary) {
  out << "class,slot,slot_name,min,q1,median,q3,max\n";
  for (std::size_t c = 0; c < summary.classes.size(); ++c)
    for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
      const auto& s = summary.classes[c][slot];
      out << csv::escape(summary.class_names[c]) << ',' << slot << ',' << slot_names()[slot] << ','
          << csv::format_double(s.min) << ',' << csv::format_double(s.q1) << ',' << csv::format_double(s.median) << ','
          << csv::format_double(s.q3) << ',' << csv::format_double(s.max) << '\n';
    }
}

}  // namespace chirp
