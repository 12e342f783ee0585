#include "chirp/eval.hpp"

#include "chirp/random.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <sstream>

using namespace chirp;

namespace {

ConfusionMatrix from_rows(const std::vector<std::vector<int>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  ConfusionMatrix m;
  m.counts = CountMatrix::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m.counts(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  for (Eigen::Index c = 0; c < n; ++c) m.class_names.push_back(std::string(1, static_cast<char>('a' + c)));
  return m;
}

// Bird table: 13 species plus pseudo, 5 eval samples each.
ConfusionMatrix bird_table() {
  return from_rows({
      {5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
      {0, 3, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1},
      {0, 0, 2, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 1},
      {0, 0, 0, 5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
      {0, 0, 0, 0, 4, 0, 0, 0, 1, 0, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 4, 1, 0, 0, 0, 0, 0, 0, 0},
      {0, 0, 0, 0, 1, 1, 1, 0, 0, 1, 0, 0, 1, 0},
      {1, 0, 0, 0, 0, 0, 0, 4, 0, 0, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 5, 0, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 1, 0, 1, 3, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 3, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 4, 0, 0},
      {0, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 5},
  });
}

ConfusionMatrix diagonal_with_pseudo_row(std::size_t classes, int per_class, std::vector<int> pseudo_row) {
  std::vector<std::vector<int>> rows(classes, std::vector<int>(classes, 0));
  for (std::size_t c = 0; c + 1 < classes; ++c) rows[c][c] = per_class;
  rows.back() = std::move(pseudo_row);
  return from_rows(rows);
}

}  // namespace

TEST_CASE("bird table arithmetic") {
  const auto report = summarize(bird_table());
  CHECK(report.matrix.total() == 70);
  CHECK(report.matrix.correct() == 50);
  CHECK(round2(report.overall_accuracy) == doctest::Approx(71.43));
  CHECK(round2(report.overall_error_rate) == doctest::Approx(28.57));
  CHECK(report.hypothesis_pass);

  // The printed "Total Error" row is the per-column false-positive count.
  const std::vector<std::int64_t> printed{1, 2, 1, 0, 1, 2, 2, 2, 3, 1, 1, 1, 1, 2};
  for (std::size_t c = 0; c < printed.size(); ++c) CHECK(report.per_class[c].false_positives == printed[c]);
  // Rates use all 70 evaluated samples.
  CHECK(report.per_class[0].false_positive_rate == doctest::Approx(100.0 / 70.0));
  CHECK(report.per_class[8].false_positive_rate == doctest::Approx(300.0 / 70.0));
}

TEST_CASE("dog table arithmetic") {
  const auto m = diagonal_with_pseudo_row(9, 2, {0, 0, 1, 0, 0, 0, 0, 0, 1});
  CHECK(m.total() == 18);
  CHECK(m.correct() == 17);
  const auto report = summarize(m);
  CHECK(round2(report.overall_accuracy) == doctest::Approx(94.44));
  CHECK(round2(report.overall_error_rate) == doctest::Approx(5.56));
  CHECK(round2(report.per_class[2].false_positive_rate) == doctest::Approx(5.56));
  for (std::size_t c = 0; c < 9; ++c)
    if (c != 2) CHECK(report.per_class[c].false_positives == 0);
}

TEST_CASE("frog table is recomputed from its counts") {
  std::vector<int> pseudo(12, 0);
  pseudo[0] = 2;
  const auto m = diagonal_with_pseudo_row(12, 2, pseudo);
  CHECK(m.total() == 24);
  CHECK(m.correct() == 22);
  const auto report = summarize(m);
  CHECK(round2(report.overall_accuracy) == doctest::Approx(91.67));
  CHECK(report.per_class[0].false_positives == 2);
}

TEST_CASE("confusion_matrix against direct pair counting") {
  Rng rng(99);
  std::vector<std::size_t> truth(1000), pred(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    truth[i] = rng.index(3);
    pred[i] = rng.index(3);
  }
  const auto m = confusion_matrix(truth, pred, 3);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < 3; ++p) {
      std::int64_t count = 0;
      for (std::size_t i = 0; i < 1000; ++i) count += (truth[i] == t && pred[i] == p) ? 1 : 0;
      CHECK(m.counts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(p)) == count);
    }
  const std::int64_t off_diagonal = m.counts.sum() - m.counts.trace();
  CHECK(m.correct() + off_diagonal == m.total());
  CHECK(m.total() == 1000);

  const auto self = summarize(confusion_matrix(truth, truth, 3));
  CHECK(self.overall_accuracy == 100.0);
  CHECK(self.overall_error_rate == 0.0);
  CHECK(self.hypothesis_pass);

  const std::vector<std::size_t> bad{0, 3};
  const std::vector<std::size_t> ok{0, 1};
  CHECK_THROWS_AS(confusion_matrix(bad, ok, 3), LabelOutOfRange);
  CHECK_THROWS_AS(confusion_matrix(ok, bad, 3), LabelOutOfRange);
  CHECK_THROWS_AS(summarize(ConfusionMatrix{CountMatrix::Zero(2, 2), {"a", "b"}}), EmptyMatrix);
}

TEST_CASE("accuracy and error always sum to 100") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.index(6));
    ConfusionMatrix m{CountMatrix::Zero(n, n), {}};
    for (Eigen::Index i = 0; i < m.counts.size(); ++i) m.counts(i) = static_cast<std::int64_t>(rng.index(5));
    m.counts(0, 0) += 1;
    for (Eigen::Index c = 0; c < n; ++c) m.class_names.push_back("c" + std::to_string(c));
    const auto r = summarize(m, 50.0);
    CHECK(std::abs(r.overall_accuracy + r.overall_error_rate - 100.0) < 1e-9);
    CHECK(r.hypothesis_pass == (r.overall_accuracy >= 50.0));
  }
}

TEST_CASE("perfect real classes can still carry a nonzero error rate") {
  // Class "song" is always right, but half the pseudo clips are called "song".
  const auto m = from_rows({{4, 0}, {2, 2}});
  const auto r = summarize(m);
  CHECK(m.counts(0, 0) == m.counts.row(0).sum());
  CHECK(r.overall_error_rate > 0.0);
  CHECK(r.per_class[0].false_positives == 2);
  CHECK(r.overall_accuracy == doctest::Approx(75.0));
}

TEST_CASE("hypothesis threshold") {
  CHECK(summarize(from_rows({{7, 3}, {0, 0}})).hypothesis_pass);
  CHECK_FALSE(summarize(from_rows({{69, 31}, {0, 0}})).hypothesis_pass);
  CHECK(summarize(from_rows({{69, 31}, {0, 0}}), 60.0).hypothesis_pass);
  const auto identity = summarize(from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  CHECK(identity.overall_accuracy == 100.0);
  CHECK(identity.overall_error_rate == 0.0);
}

TEST_CASE("cross_fold_report") {
  const auto sixty = summarize(from_rows({{3, 2}, {0, 0}}));
  const auto eighty = summarize(from_rows({{4, 1}, {0, 0}}));
  const std::vector<EvalReport> two{sixty, eighty};
  const auto r = cross_fold_report(two);
  CHECK(r.mean_accuracy == doctest::Approx(70.0));
  CHECK(r.std_accuracy == doctest::Approx(10.0));
  CHECK(r.min_accuracy == doctest::Approx(60.0));
  CHECK(r.max_accuracy == doctest::Approx(80.0));
  CHECK(r.pooled.matrix.total() == 10);
  CHECK(r.pooled.matrix.counts(0, 0) == 7);

  const std::vector<EvalReport> same(10, summarize(bird_table()));
  const auto s = cross_fold_report(same);
  CHECK(s.std_accuracy == doctest::Approx(0.0));
  CHECK(s.mean_accuracy == doctest::Approx(same[0].overall_accuracy));
  CHECK(s.pooled.matrix.total() == 700);
  CHECK_THROWS_AS(cross_fold_report(std::span<const EvalReport>{}), EmptyMatrix);
}

TEST_CASE("report text layout") {
  auto m = diagonal_with_pseudo_row(3, 2, {1, 0, 1});
  m.class_names = {"beagle", "husky", "_pseudo"};
  std::ostringstream out;
  write_report_text(out, summarize(m));
  const std::string text = out.str();
  CHECK(text.find("Total Correct") != std::string::npos);
  auto line_with = [&](const std::string& label) {
    const auto start = text.find(label);
    return start == std::string::npos ? std::string() : text.substr(start, text.find('\n', start) - start);
  };
  CHECK(line_with("Overall error rate (%)").find("16.67") != std::string::npos);
  CHECK(line_with("Overall accuracy (%)").find("83.33") != std::string::npos);
  CHECK(line_with("False positive rate (%)").find("16.67") != std::string::npos);
  CHECK(text.find("beagle") < text.find("husky"));

  std::ostringstream csv;
  write_report_csv(csv, summarize(m));
  CHECK(csv.str().rfind("true_class,beagle,husky,_pseudo,total_correct\n", 0) == 0);
  CHECK(csv.str().find("beagle,2,1,16.67\n") != std::string::npos);
  CHECK(csv.str().find("overall_accuracy,83.33\n") != std::string::npos);
}

TEST_CASE("five-number summary") {
  auto s = five_number_summary({5, 3, 1, 4, 2});
  CHECK(s.min == 1);
  CHECK(s.q1 == 1.5);
  CHECK(s.median == 3);
  CHECK(s.q3 == 4.5);
  CHECK(s.max == 5);

  s = five_number_summary({1, 2, 3, 4, 5, 6});
  CHECK(s.q1 == 2);
  CHECK(s.median == 3.5);
  CHECK(s.q3 == 5);

  s = five_number_summary({7.25});
  CHECK(s.min == 7.25);
  CHECK(s.q1 == 7.25);
  CHECK(s.median == 7.25);
  CHECK(s.q3 == 7.25);
  CHECK(s.max == 7.25);

  CHECK_THROWS(five_number_summary({}));
}

TEST_CASE("feature summary flags slots that separate classes") {
  auto corpus = testing::sized_corpus({5, 6, 1}, 3);
  for (auto& s : corpus.samples) s.features[27] = s.label == 0 ? 10.0 + s.features[27] * 0.1 : s.features[27] * 0.1;
  const auto summary = feature_summary(corpus);
  REQUIRE(summary.classes.size() == 3);
  const auto pairs = separable_pairs(summary, 27);
  CHECK(std::find(pairs.begin(), pairs.end(), std::pair<std::size_t, std::size_t>{0, 1}) != pairs.end());
  CHECK(std::find(pairs.begin(), pairs.end(), std::pair<std::size_t, std::size_t>{0, 2}) != pairs.end());
  CHECK(std::find(pairs.begin(), pairs.end(), std::pair<std::size_t, std::size_t>{1, 0}) == pairs.end());
  const auto& single = summary.classes[2][5];
  CHECK(single.min == single.max);
  CHECK(single.q1 == single.q3);

  std::ostringstream out;
  write_feature_summary_csv(out, summary);
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  CHECK(lines == 1 + 3 * 28);
  CHECK(out.str().rfind("class,slot,slot_name,min,q1,median,q3,max\n", 0) == 0);
}
