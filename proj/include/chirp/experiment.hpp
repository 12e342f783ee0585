#pragma once

// Glue between a labeled corpus, its fold plan and the network trainer.

#include "chirp/dataset.hpp"
#include "chirp/eval.hpp"
#include "chirp/mlp.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace chirp {

/// Hidden-layer geometry [k, m]. A width of 0 means "one unit per class".
struct Geometry {
  std::size_t hidden_width = 0;
  std::size_t hidden_layers = 1;

  NetworkSpec spec_for(std::size_t inputs, std::size_t classes) const {
    return {inputs, hidden_width == 0 ? classes : hidden_width, hidden_layers, classes};
  }
};

/// Every slot index 0..27.
std::vector<std::size_t> all_slots();

Eigen::VectorXd select_inputs(const FeatureVector& features, std::span<const std::size_t> slots);

/// Inputs restricted to `slots`, one-hot targets over the corpus classes.
TrainingSet make_training_set(const LabeledCorpus& corpus, std::span<const std::size_t> ids,
                              std::span<const std::size_t> slots);

struct FoldOutcome {
  Network network;
  TrainingState<double> state;
  EvalReport report;
};

/// Trains on the split's train set (test set drives early stopping) and
/// evaluates on its eval set.
FoldOutcome train_fold(const LabeledCorpus& corpus, const SplitPlan& split, std::span<const std::size_t> slots,
                       const Geometry& geometry, const TrainingConfig& config);

struct CrossValidation {
  std::vector<FoldOutcome> folds;
  CrossFoldReport summary;
  /// Fold with the highest eval accuracy; the lowest index wins ties.
  std::size_t best_fold = 0;
};

/// Fold f trains with seed `config.seed + f`. Folds run on up to `jobs`
/// threads; results do not depend on `jobs`.
CrossValidation cross_validate(const LabeledCorpus& corpus, const FoldPlan& plan, std::span<const std::size_t> slots,
                               const Geometry& geometry, const TrainingConfig& config, std::size_t jobs = 1,
                               double threshold = kHypothesisThreshold);

}  // namespace chirp
