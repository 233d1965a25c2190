#include "bsmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bsmix/error.hpp"

namespace bsmix {

double balance(std::span<const double> final_scores) {
  if (final_scores.empty()) throw DomainError("balance of an empty score vector");
  return *std::min_element(final_scores.begin(), final_scores.end());
}

double combined(std::span<const double> final_scores) {
  if (final_scores.empty()) throw DomainError("combined of an empty score vector");
  return std::accumulate(final_scores.begin(), final_scores.end(), 0.0) /
         static_cast<double>(final_scores.size());
}

std::vector<std::size_t> selection_histogram(const Trace& trace, std::size_t num_prompts) {
  std::vector<std::size_t> counts(num_prompts, 0);
  if (trace.decisions.empty()) return counts;
  for (std::size_t i = 0; i + 1 < trace.decisions.size(); ++i) {
    const auto c = trace.decisions[i].chosen;
    if (c >= num_prompts) throw DomainError("trace decision chose an out-of-range prompt");
    ++counts[c];
  }
  return counts;
}

double entropy_of_counts(std::span<const std::size_t> counts) {
  const double total =
      static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double selection_entropy(const Trace& trace, std::size_t num_prompts) {
  const auto counts = selection_histogram(trace, num_prompts);
  return entropy_of_counts(counts);
}

RunSummary summarize(const Trace& trace, std::size_t num_prompts) {
  RunSummary s;
  s.strategy = trace.strategy;
  s.balance = balance(trace.final_scores);
  s.combined = combined(trace.final_scores);
  s.selection_histogram = selection_histogram(trace, num_prompts);
  s.selection_entropy = entropy_of_counts(s.selection_histogram);
  return s;
}

MeanSe mean_and_se(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  if (sorted.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

std::vector<AggregateSummary> aggregate(std::span<const Trace> traces, std::size_t num_prompts) {
  std::map<std::string, std::vector<RunSummary>> groups;
  for (const auto& t : traces) groups[t.strategy].push_back(summarize(t, num_prompts));

  std::vector<AggregateSummary> out;
  for (const auto& [name, runs] : groups) {
    std::vector<double> bal, comb, ent;
    AggregateSummary a;
    a.strategy = name;
    a.seeds = runs.size();
    a.selection_histogram.assign(num_prompts, 0);
    for (const auto& r : runs) {
      bal.push_back(r.balance);
      comb.push_back(r.combined);
      ent.push_back(r.selection_entropy);
      for (std::size_t p = 0; p < num_prompts; ++p) a.selection_histogram[p] += r.selection_histogram[p];
    }
    const auto b = mean_and_se(bal);
    const auto c = mean_and_se(comb);
    const auto e = mean_and_se(ent);
    a.balance_mean = b.mean;
    a.balance_se = b.se;
    a.combined_mean = c.mean;
    a.combined_se = c.se;
    a.entropy_mean = e.mean;
    a.entropy_se = e.se;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace bsmix
