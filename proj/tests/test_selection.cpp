#include "chirp/selection.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace chirp;

namespace {

// Three classes spread along slot 0; every other slot is noise.
LabeledCorpus line_corpus(std::uint64_t seed) {
  Rng rng(seed);
  LabeledCorpus corpus;
  corpus.class_names = {"low", "mid", "high"};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 20; ++i) {
      LabeledSample s;
      s.label = c;
      s.clip_path = corpus.class_names[c] + std::to_string(i);
      for (std::size_t slot = 0; slot < kSlotCount; ++slot) s.features[slot] = rng.normal();
      s.features[0] = 3.0 * static_cast<double>(c) + 0.2 * rng.normal();
      corpus.samples.push_back(s);
    }
  return corpus;
}

}  // namespace

TEST_CASE("mdl_score arithmetic") {
  CHECK(mdl_score(100, 0.01, 20) == doctest::Approx(100 * std::log(0.01 + 1e-12) + 10 * std::log(100.0)));
  CHECK(std::round(mdl_score(100, 0.01, 20) * 100.0) / 100.0 == doctest::Approx(-414.47));
  CHECK(mdl_score(50, 0.1, 10) < mdl_score(50, 0.1, 11));
  CHECK(mdl_score(50, 0.05, 10) < mdl_score(50, 0.1, 10));
  CHECK(std::isfinite(mdl_score(50, 0.0, 10)));
}

TEST_CASE("mdl_score of a network uses its train MSE and weight count") {
  Rng rng(1);
  auto net = init_network(NetworkSpec{2, 3, 1, 2}, 4);
  TrainingSet set{Eigen::MatrixXd::Random(15, 2), one_hot(std::vector<std::size_t>(15, 1), 2)};
  CHECK(mdl_score(net, set) == doctest::Approx(mdl_score(15, mse(net, set), net.weight_count())));
}

TEST_CASE("forward selection picks the separating slot and stops") {
  const auto corpus = line_corpus(3);
  const auto plan = plan_folds(corpus, 5);
  const Geometry geometry;
  const TrainingConfig config;
  const auto trace = forward_select(corpus, plan, geometry, config);

  REQUIRE_FALSE(trace.final_subset.empty());
  CHECK(trace.final_subset.front() == 0);
  CHECK(trace.final_subset == std::vector<std::size_t>{0});

  // Exhaustive first-round comparison: slot 0 has the lowest description length.
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_slot = 99;
  std::map<std::size_t, std::size_t> per_round;
  for (const auto& step : trace.steps) {
    ++per_round[step.round];
    if (step.round == 0 && step.mdl < best) {
      best = step.mdl;
      best_slot = step.slot;
    }
  }
  CHECK(best_slot == 0);
  for (const auto& [round, count] : per_round) CHECK(count == kSlotCount - round);
  CHECK(per_round.size() == 2);  // one acceptance, then a round without improvement

  std::size_t accepted = 0;
  for (const auto& step : trace.steps) accepted += step.accepted;
  CHECK(accepted == trace.final_subset.size());
  CHECK(trace.final_mdl == doctest::Approx(best));
}

TEST_CASE("forward selection is reproducible and independent of thread count") {
  const auto corpus = testing::grid_corpus(3, 9, 12, 8);
  const auto plan = plan_folds(corpus, 2);
  TrainingConfig config;
  config.max_epochs = 300;
  const std::vector<std::size_t> candidates{1, 3, 5, 9, 20};
  const auto a = forward_select(corpus, plan, Geometry{}, config, 1, candidates);
  const auto b = forward_select(corpus, plan, Geometry{}, config, 3, candidates);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].slot == b.steps[i].slot);
    CHECK(a.steps[i].round == b.steps[i].round);
    CHECK(a.steps[i].mdl == b.steps[i].mdl);
    CHECK(a.steps[i].accepted == b.steps[i].accepted);
  }
  CHECK(a.final_subset == b.final_subset);
  for (const auto& step : a.steps) CHECK(std::find(candidates.begin(), candidates.end(), step.slot) != candidates.end());

  // Accepted scores never increase.
  double previous = std::numeric_limits<double>::infinity();
  for (const auto& step : a.steps)
    if (step.accepted) {
      CHECK(step.mdl < previous);
      previous = step.mdl;
    }
}

TEST_CASE("selection trace and subset files") {
  SelectionTrace trace;
  trace.steps = {{0, 4, -12.5, false}, {0, 7, -20.25, true}, {1, 4, -19.0, false}};
  trace.final_subset = {7};
  std::ostringstream out;
  write_selection_trace(out, trace);
  CHECK(out.str() ==
        "round,slot,slot_name,mdl,accepted\n"
        "0,4,rms_mean,-12.5,false\n"
        "0,7,low_energy_fraction_std,-20.25,true\n"
        "1,4,rms_mean,-19,false\n");

  const std::vector<std::size_t> slots{16, 14, 15, 0};
  std::stringstream subset;
  write_subset(subset, slots);
  CHECK(subset.str() == "lpc_mean\nmoments_mean\nmoments_std\nmfcc_mean\n");
  CHECK(read_subset(subset) == slots);

  std::istringstream mixed("3, rms_mean\n\n27\n");
  CHECK(read_subset(mixed) == std::vector<std::size_t>{3, 4, 27});
  std::istringstream duplicate("3\nzero_crossings_std\n");
  CHECK_THROWS(read_subset(duplicate));
  std::istringstream unknown("loudness\n");
  CHECK_THROWS(read_subset(unknown));
  std::istringstream range("28\n");
  CHECK_THROWS(read_subset(range));
}
