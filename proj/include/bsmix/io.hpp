#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsmix/ddim_schedule.hpp"
#include "bsmix/metrics.hpp"
#include "bsmix/mixer.hpp"
#include "bsmix/score_sim.hpp"
#include "bsmix/toy_diffusion.hpp"

namespace bsmix::io {

inline constexpr int kTraceFormatVersion = 1;

// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
std::string format_number(double v);

nlohmann::json trace_to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& j);

// One row per StepDecision: step, conditioning, sigma, tte, chosen, then
// raw_<p>, spot_<p> and bs_<p> for every prompt.
std::string trace_to_csv(const Trace& trace);

// Header: strategy,seeds,balance_mean,balance_se,combined_mean,combined_se,entropy_mean
std::string summary_csv(std::span<const AggregateSummary> rows);
inline constexpr const char* kSummaryCsvHeader =
    "strategy,seeds,balance_mean,balance_se,combined_mean,combined_se,entropy_mean";

// Header: index,train_timestep,beta,alpha_bar,variance,sigma
std::string schedule_csv(const DiffusionSchedule& s);
inline constexpr const char* kScheduleCsvHeader =
    "index,train_timestep,beta,alpha_bar,variance,sigma";

// Header: seed,sample,x,y,score_<label>... (x0..x{d-1} when d != 2)
std::string toy_samples_csv(std::span<const ToySample> samples,
                            std::span<const GaussianMixtureConcept> concepts);

SimEnvConfig sim_env_from_json(const nlohmann::json& j);
nlohmann::json sim_env_to_json(const SimEnvConfig& env);

GaussianMixtureConcept concept_from_json(const nlohmann::json& j);
nlohmann::json concept_to_json(const GaussianMixtureConcept& c);

struct ToyFileConfig {
  std::vector<GaussianMixtureConcept> concepts;
  std::size_t samples_per_seed = 1;
  double eta = 0.0;
};
// {"concepts": [...], "samples_per_seed": n, "eta": e}; the last two optional.
ToyFileConfig toy_config_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace bsmix::io
