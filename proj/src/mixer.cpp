#include "bsmix/mixer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <numeric>

#include "bsmix/error.hpp"
#include "bsmix/option_pricing.hpp"

namespace bsmix {

namespace {

std::size_t parse_index(std::string_view text, std::string_view context) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ConfigError("invalid integer '" + std::string(text) + "' in strategy '" +
                      std::string(context) + "'");
  }
  return value;
}

// Clamps into [0, 1]; returns how many entries were moved.
std::size_t clamp_scores(std::vector<double>& scores, std::size_t step) {
  std::size_t moved = 0;
  for (double& s : scores) {
    if (std::isnan(s)) throw EnvironmentError(step, "environment returned a NaN score");
    if (s < 0.0 || s > 1.0) {
      s = std::clamp(s, 0.0, 1.0);
      ++moved;
    }
  }
  return moved;
}

}  // namespace

std::string Strategy::name() const {
  switch (kind) {
    case StrategyKind::black_scholes: return "black_scholes";
    case StrategyKind::clip_min:
      return wiring == ScoreWiring::lagged ? "clip_min" : "clip_min:forecast";
    case StrategyKind::alternating: return "alternating";
    case StrategyKind::stepwise: return "stepwise:" + std::to_string(switch_step);
    case StrategyKind::lerp: return "lerp";
    case StrategyKind::single: return "single:" + std::to_string(prompt);
  }
  return "unknown";
}

Strategy Strategy::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view arg =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  const bool has_arg = colon != std::string_view::npos;

  if (head == "black_scholes" && !has_arg) return black_scholes();
  if (head == "alternating" && !has_arg) return alternating();
  if (head == "lerp" && !has_arg) return lerp();
  if (head == "clip_min") {
    if (!has_arg || arg == "lagged") return clip_min(ScoreWiring::lagged);
    if (arg == "forecast") return clip_min(ScoreWiring::forecast);
  }
  if (head == "stepwise") return stepwise(has_arg ? parse_index(arg, text) : 12);
  if (head == "single" && has_arg) return single(parse_index(arg, text));
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

std::vector<Strategy> parse_strategy_list(std::string_view comma_separated) {
  std::vector<Strategy> out;
  std::size_t start = 0;
  while (start <= comma_separated.size()) {
    auto end = comma_separated.find(',', start);
    if (end == std::string_view::npos) end = comma_separated.size();
    const auto item = comma_separated.substr(start, end - start);
    if (item.empty()) throw ConfigError("empty entry in strategy list");
    out.push_back(Strategy::parse(item));
    start = end + 1;
  }
  return out;
}

double MixerConfig::effective_rate() const {
  return rate.value_or(1.0 / static_cast<double>(total_steps));
}

void validate(const MixerConfig& cfg) {
  if (cfg.num_prompts < 2) throw ConfigError("mixer needs at least 2 prompts");
  if (cfg.total_steps < 1) throw ConfigError("mixer total_steps must be >= 1");
  if (!(cfg.strike >= 0.0) || !std::isfinite(cfg.strike)) {
    throw ConfigError("mixer strike must be finite and >= 0");
  }
  if (!(cfg.score_scale > 0.0) || !std::isfinite(cfg.score_scale)) {
    throw ConfigError("mixer score_scale must be > 0");
  }
  if (cfg.rate && !std::isfinite(*cfg.rate)) throw ConfigError("mixer rate must be finite");
  if (cfg.strike_mode == StrikeMode::calibrated && cfg.calibration_runs == 0) {
    throw ConfigError("calibrated strike needs calibration_runs >= 1");
  }
}

std::size_t argmin_index(std::span<const double> values) {
  if (values.empty()) throw DomainError("argmin of an empty score vector");
  return static_cast<std::size_t>(std::min_element(values.begin(), values.end()) -
                                  values.begin());
}

std::vector<double> bs_scores(std::span<const double> raw_scores, double tte, double sigma,
                              const MixerConfig& cfg) {
  std::vector<double> out;
  out.reserve(raw_scores.size());
  for (double raw : raw_scores) {
    const OptionParams p{raw * cfg.score_scale, cfg.strike, cfg.effective_rate(), sigma, tte};
    out.push_back(bs_call_price(p).price);
  }
  return out;
}

namespace {

std::size_t argmin_price_then_spot(std::span<const double> prices,
                                   std::span<const double> raw_scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < prices.size(); ++i) {
    if (prices[i] < prices[best] || (prices[i] == prices[best] && raw_scores[i] < raw_scores[best])) {
      best = i;
    }
  }
  return best;
}

}  // namespace

std::size_t choose_black_scholes(std::span<const double> raw_scores, double tte, double sigma,
                                 const MixerConfig& cfg) {
  if (raw_scores.empty()) throw DomainError("choose_black_scholes: empty score vector");
  const auto prices = bs_scores(raw_scores, tte, sigma, cfg);
  return argmin_price_then_spot(prices, raw_scores);
}

std::size_t choose_clip_min(std::optional<std::span<const double>> prev_raw_scores) {
  if (!prev_raw_scores) return 0;
  return argmin_index(*prev_raw_scores);
}

std::size_t choose_alternating(std::size_t step, std::size_t num_prompts) {
  if (num_prompts == 0) throw DomainError("choose_alternating: no prompts");
  return step % num_prompts;
}

std::size_t choose_stepwise(std::size_t step, std::size_t switch_step) {
  return step < switch_step ? 0 : 1;
}

double calibrate_strike(std::span<const double> final_combined_scores, const MixerConfig& cfg) {
  if (final_combined_scores.empty()) throw DomainError("calibrate_strike: no samples");
  const double sum =
      std::accumulate(final_combined_scores.begin(), final_combined_scores.end(), 0.0);
  return sum / static_cast<double>(final_combined_scores.size()) * cfg.score_scale;
}

Trace run_strategy(ScoreEnvironment& env, const Strategy& strategy, const MixerConfig& cfg,
                   const DiffusionSchedule& schedule, std::uint64_t seed) {
  validate(cfg);
  const std::size_t n = cfg.num_prompts;
  const std::size_t total = cfg.total_steps;
  if (env.num_prompts() != n) {
    throw ConfigError("environment has " + std::to_string(env.num_prompts()) +
                      " prompts, mixer expects " + std::to_string(n));
  }
  if (schedule.num_inference_steps() != total) {
    throw ConfigError("schedule has " + std::to_string(schedule.num_inference_steps()) +
                      " inference steps, mixer expects " + std::to_string(total));
  }
  if (strategy.kind == StrategyKind::single && strategy.prompt >= n) {
    throw ConfigError("single strategy prompt out of range");
  }
  if (strategy.kind == StrategyKind::stepwise &&
      (strategy.switch_step < 1 || strategy.switch_step + 1 > total)) {
    throw ConfigError("stepwise switch_step must lie in [1, T-1]");
  }

  Trace trace;
  trace.strategy = strategy.name();
  trace.seed = seed;
  trace.decisions.reserve(total);

  env.reset(seed);
  Conditioning cond = kCombined;
  std::optional<std::vector<double>> previous;
  std::size_t clamped = 0;

  for (std::size_t i = 0; i < total; ++i) {
    std::vector<double> raw;
    try {
      raw = env.step(i, cond);
    } catch (const EnvironmentError&) {
      throw;
    } catch (const std::exception& e) {
      throw EnvironmentError(i, e.what());
    }
    if (raw.size() != n) throw EnvironmentError(i, "environment returned wrong score count");
    clamped += clamp_scores(raw, i);

    StepDecision d;
    d.step = i;
    d.conditioning = cond;
    d.sigma = sigma_at(schedule, i);
    d.tte = static_cast<double>(time_to_expiry(total, i));
    d.spot_prices.resize(n);
    for (std::size_t p = 0; p < n; ++p) d.spot_prices[p] = raw[p] * cfg.score_scale;
    d.bs_scores = bs_scores(raw, d.tte, d.sigma, cfg);

    const std::size_t upcoming = i + 1;
    Conditioning next;
    switch (strategy.kind) {
      case StrategyKind::black_scholes:
        d.chosen = argmin_price_then_spot(d.bs_scores, raw);
        next = d.chosen;
        break;
      case StrategyKind::clip_min:
        if (strategy.wiring == ScoreWiring::forecast) {
          d.chosen = choose_clip_min(std::span<const double>(raw));
        } else {
          d.chosen = previous ? choose_clip_min(std::span<const double>(*previous))
                              : choose_clip_min(std::nullopt);
        }
        next = d.chosen;
        break;
      case StrategyKind::alternating:
        d.chosen = choose_alternating(upcoming, n);
        next = d.chosen;
        break;
      case StrategyKind::stepwise:
        d.chosen = choose_stepwise(upcoming, strategy.switch_step);
        next = d.chosen;
        break;
      case StrategyKind::lerp:
        d.chosen = argmin_price_then_spot(d.bs_scores, raw);
        next = kCombined;
        break;
      case StrategyKind::single:
        d.chosen = strategy.prompt;
        next = d.chosen;
        break;
    }

    d.raw_scores = raw;
    previous = std::move(raw);
    trace.decisions.push_back(std::move(d));
    cond = next;
  }

  trace.final_scores = *previous;
  if (clamped > 0) {
    std::cerr << "warning: " << clamped << " score(s) outside [0,1] clamped in run seed=" << seed
              << " strategy=" << trace.strategy << '\n';
  }
  return trace;
}

double calibrated_strike(ScoreEnvironment& env, const MixerConfig& cfg,
                         const DiffusionSchedule& schedule, std::span<const std::uint64_t> seeds) {
  std::vector<double> samples;
  for (auto seed : seeds) {
    const Trace t = run_strategy(env, Strategy::lerp(), cfg, schedule, seed);
    samples.insert(samples.end(), t.final_scores.begin(), t.final_scores.end());
  }
  return calibrate_strike(samples, cfg);
}

MixerConfig resolve_strike(ScoreEnvironment& env, MixerConfig cfg,
                           const DiffusionSchedule& schedule, std::uint64_t master_seed) {
  if (cfg.strike_mode != StrikeMode::calibrated) return cfg;
  std::vector<std::uint64_t> seeds(cfg.calibration_runs);
  // Offset keeps calibration streams disjoint from the evaluation runs.
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    seeds[k] = derive_seed(master_seed ^ 0xca11b8a7e5ull, k);
  }
  cfg.strike = calibrated_strike(env, cfg, schedule, seeds);
  return cfg;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace bsmix
