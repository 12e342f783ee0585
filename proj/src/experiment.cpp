#include "chirp/experiment.hpp"

#include "chirp/parallel.hpp"

#include <numeric>
#include <optional>

namespace chirp {

std::vector<std::size_t> all_slots() {
  std::vector<std::size_t> slots(kSlotCount);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  return slots;
}

Eigen::VectorXd select_inputs(const FeatureVector& features, std::span<const std::size_t> slots) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(slots.size()));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i] >= kSlotCount) throw DimensionMismatch("slot " + std::to_string(slots[i]) + " does not exist");
    out[static_cast<Eigen::Index>(i)] = features[slots[i]];
  }
  return out;
}

TrainingSet make_training_set(const LabeledCorpus& corpus, std::span<const std::size_t> ids,
                              std::span<const std::size_t> slots) {
  TrainingSet set;
  set.inputs.resize(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(slots.size()));
  std::vector<std::size_t> labels;
  labels.reserve(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto& sample = corpus.samples[ids[r]];
    set.inputs.row(static_cast<Eigen::Index>(r)) = select_inputs(sample.features, slots).transpose();
    labels.push_back(sample.label);
  }
  set.targets = one_hot(labels, corpus.class_count());
  return set;
}

FoldOutcome train_fold(const LabeledCorpus& corpus, const SplitPlan& split, std::span<const std::size_t> slots,
                       const Geometry& geometry, const TrainingConfig& config) {
  const auto train_set = make_training_set(corpus, split.train, slots);
  const auto test_set = make_training_set(corpus, split.test, slots);

  Network net = init_network(geometry.spec_for(slots.size(), corpus.class_count()), config.seed);
  net.labels = corpus.class_names;
  net.input_slots.assign(slots.begin(), slots.end());
  auto trained = train(std::move(net), train_set, test_set, config);

  std::vector<std::size_t> truths;
  std::vector<std::size_t> predictions;
  for (std::size_t id : split.eval) {
    const auto& sample = corpus.samples[id];
    truths.push_back(sample.label);
    predictions.push_back(classify(trained.network, select_inputs(sample.features, slots)).index);
  }
  auto matrix = confusion_matrix(truths, predictions, corpus.class_count(), corpus.class_names);
  return {std::move(trained.network), trained.state, summarize(matrix)};
}

CrossValidation cross_validate(const LabeledCorpus& corpus, const FoldPlan& plan, std::span<const std::size_t> slots,
                               const Geometry& geometry, const TrainingConfig& config, std::size_t jobs,
                               double threshold) {
  std::vector<std::optional<FoldOutcome>> outcomes(plan.folds.size());
  parallel_for(plan.folds.size(), jobs, [&](std::size_t f) {
    TrainingConfig fold_config = config;
    fold_config.seed = config.seed + f;
    outcomes[f] = train_fold(corpus, plan.folds[f], slots, geometry, fold_config);
  });

  CrossValidation cv;
  std::vector<EvalReport> reports;
  for (auto& o : outcomes) {
    reports.push_back(o->report);
    cv.folds.push_back(std::move(*o));
  }
  cv.summary = cross_fold_report(reports, threshold);
  for (std::size_t f = 1; f < cv.folds.size(); ++f)
    if (cv.folds[f].report.overall_accuracy > cv.folds[cv.best_fold].report.overall_accuracy) cv.best_fold = f;
  return cv;
}

}  // namespace chirp
