#include "chirp/selection.hpp"

#include "chirp/csv.hpp"
#include "chirp/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

namespace chirp {

double mdl_score(std::size_t samples, double train_mse, std::size_t weight_count) {
  const auto n = static_cast<double>(samples);
  return n * std::log(train_mse + 1e-12) + 0.5 * static_cast<double>(weight_count) * std::log(n);
}

double mdl_score(const Network& net, const TrainingSet& train_set) {
  return mdl_score(static_cast<std::size_t>(train_set.size()), mse(net, train_set), net.weight_count());
}

SelectionTrace forward_select(const LabeledCorpus& corpus, const FoldPlan& plan, const Geometry& geometry,
                              const TrainingConfig& config, std::size_t jobs,
                              std::span<const std::size_t> candidates) {
  if (plan.folds.empty()) throw std::invalid_argument("forward selection needs at least one fold");
  std::vector<std::size_t> remaining = candidates.empty() ? all_slots()
                                                          : std::vector<std::size_t>(candidates.begin(), candidates.end());
  std::sort(remaining.begin(), remaining.end());
  const SplitPlan& split = plan.folds.front();

  SelectionTrace trace;
  for (std::size_t round = 0; !remaining.empty(); ++round) {
    std::vector<double> scores(remaining.size());
    parallel_for(remaining.size(), jobs, [&](std::size_t c) {
      std::vector<std::size_t> subset = trace.final_subset;
      subset.push_back(remaining[c]);
      const auto train_set = make_training_set(corpus, split.train, subset);
      const auto test_set = make_training_set(corpus, split.test, subset);
      Network net = init_network(geometry.spec_for(subset.size(), corpus.class_count()), config.seed);
      const auto trained = train(std::move(net), train_set, test_set, config);
      scores[c] = mdl_score(trained.network, train_set);
    });

    std::size_t best = 0;
    for (std::size_t c = 1; c < remaining.size(); ++c)
      if (scores[c] < scores[best]) best = c;
    const bool accept = scores[best] < trace.final_mdl;

    for (std::size_t c = 0; c < remaining.size(); ++c)
      trace.steps.push_back({round, remaining[c], scores[c], accept && c == best});
    if (!accept) break;

    trace.final_subset.push_back(remaining[best]);
    trace.final_mdl = scores[best];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return trace;
}

void write_selection_trace(std::ostream& out, const SelectionTrace& trace) {
  out << "round,slot,slot_name,mdl,accepted\n";
  for (const auto& s : trace.steps)
    out << s.round << ',' << s.slot << ',' << slot_names()[s.slot] << ',' << csv::format_double(s.mdl) << ','
        << (s.accepted ? "true" : "false") << '\n';
}

void write_subset(std::ostream& out, std::span<const std::size_t> slots) {
  for (std::size_t s : slots) out << slot_names()[s] << '\n';
}

std::vector<std::size_t> read_subset(std::istream& in) {
  std::vector<std::size_t> slots;
  std::string line;
  while (std::getline(in, line)) {
    for (std::string token : csv::split(line)) {
      const auto begin = token.find_first_not_of(" \t\r");
      if (begin == std::string::npos) continue;
      token = token.substr(begin, token.find_last_not_of(" \t\r") - begin + 1);
      if (auto named = slot_index(token)) {
        slots.push_back(*named);
        continue;
      }
      std::size_t index = 0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), index);
      if (ec != std::errc() || ptr != token.data() + token.size() || index >= kSlotCount)
        throw DimensionMismatch("unknown feature slot '" + token + "'");
      slots.push_back(index);
    }
  }
  if (slots.empty()) throw DimensionMismatch("subset lists no slots");
  std::vector<std::size_t> sorted = slots;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DimensionMismatch("subset repeats a slot");
  return slots;
}

}  // namespace chirp
