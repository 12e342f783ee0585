#pragma once

#include "chirp/experiment.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace chirp {

/// Two-part description length N * ln(mse + 1e-12) + (W / 2) * ln(N) for a
/// network with W weights (biases included) fitted to N samples. Lower is
/// better.
double mdl_score(std::size_t samples, double train_mse, std::size_t weight_count);
double mdl_score(const Network& net, const TrainingSet& train_set);

struct SelectionStep {
  std::size_t round = 0;
  std::size_t slot = 0;
  double mdl = 0.0;
  bool accepted = false;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  std::vector<std::size_t> final_subset;
  double final_mdl = std::numeric_limits<double>::infinity();
};

/// Stepwise forward selection. Each round trains ANN(|S|+1, [k, m], n) on
/// the first fold for every unselected candidate and accepts the one with
/// the lowest description length if it beats the incumbent; otherwise the
/// search stops. Equal scores resolve to the lower slot index.
SelectionTrace forward_select(const LabeledCorpus& corpus, const FoldPlan& plan, const Geometry& geometry,
                              const TrainingConfig& config, std::size_t jobs = 1,
                              std::span<const std::size_t> candidates = {});

/// `round,slot,slot_name,mdl,accepted`
void write_selection_trace(std::ostream& out, const SelectionTrace& trace);

/// One slot name per line.
void write_subset(std::ostream& out, std::span<const std::size_t> slots);
/// Accepts slot names or indices, one per line or comma separated.
std::vector<std::size_t> read_subset(std::istream& in);

}  // namespace chirp
