#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bsmix/mixer.hpp"

namespace bsmix {

// Per-run view. The histogram counts the T - 1 strategy-controlled steps,
// i.e. `chosen` of every decision except the last (which conditions nothing).
struct RunSummary {
  std::string strategy;
  double balance = 0.0;
  double combined = 0.0;
  std::vector<std::size_t> selection_histogram;
  double selection_entropy = 0.0;
};

struct AggregateSummary {
  std::string strategy;
  std::size_t seeds = 0;
  double balance_mean = 0.0;
  double balance_se = 0.0;
  double combined_mean = 0.0;
  double combined_se = 0.0;
  double entropy_mean = 0.0;
  double entropy_se = 0.0;
  std::vector<std::size_t> selection_histogram;  // summed over runs
};

/// Minimum final score: how well the most neglected prompt fared.
double balance(std::span<const double> final_scores);

/// Arithmetic mean of the final scores.
double combined(std::span<const double> final_scores);

std::vector<std::size_t> selection_histogram(const Trace& trace, std::size_t num_prompts);

/// Shannon entropy (nats) of a count histogram; 0 for an empty histogram.
double entropy_of_counts(std::span<const std::size_t> counts);

double selection_entropy(const Trace& trace, std::size_t num_prompts);

RunSummary summarize(const Trace& trace, std::size_t num_prompts);

/// Mean and standard error (n - 1 denominator, 0 for a single trace) of
/// every metric, one summary per distinct strategy sorted by name. Values are
/// summed in sorted order, so the result does not depend on trace order.
std::vector<AggregateSummary> aggregate(std::span<const Trace> traces, std::size_t num_prompts);

struct MeanSe {
  double mean;
  double se;
};
/// Order-independent: values are sorted before summation.
MeanSe mean_and_se(std::span<const double> values);

}  // namespace bsmix
