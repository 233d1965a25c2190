#include "bsmix/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "bsmix/ddim_schedule.hpp"
#include "bsmix/error.hpp"
#include "bsmix/io.hpp"
#include "bsmix/metrics.hpp"
#include "bsmix/mixer.hpp"
#include "bsmix/option_pricing.hpp"
#include "bsmix/score_sim.hpp"
#include "bsmix/svg.hpp"
#include "bsmix/toy_diffusion.hpp"

namespace bsmix::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

// Flags shared by every subcommand that drives the controller.
struct MixerOptions {
  std::size_t steps = 100;
  double strike = 25.0;
  std::string strike_mode = "fixed";
  std::size_t calibration_runs = 16;
  std::optional<double> rate;
  double score_scale = 100.0;
  double beta_start = 0.00085;
  double beta_end = 0.012;
  std::size_t train_steps = 1000;

  void attach(CLI::App* sub) {
    sub->add_option("--steps", steps, "Denoising steps T (inference steps of the schedule)")
        ->capture_default_str();
    sub->add_option("--strike", strike, "Strike K in score points (0-100)")->capture_default_str();
    sub->add_option("--strike-mode", strike_mode,
                    "fixed: use --strike; calibrated: mean final score of combined-prompt runs x 100")
        ->check(CLI::IsMember({"fixed", "calibrated"}))
        ->capture_default_str();
    sub->add_option("--calibration-runs", calibration_runs,
                    "Runs used to calibrate the strike in calibrated mode")
        ->capture_default_str();
    sub->add_option("--rate", rate, "Per-step rate r (default 1/T)");
    sub->add_option("--score-scale", score_scale, "Multiplier mapping [0,1] scores to spot prices")
        ->capture_default_str();
    sub->add_option("--beta-start", beta_start, "Schedule beta_start")->capture_default_str();
    sub->add_option("--beta-end", beta_end, "Schedule beta_end")->capture_default_str();
    sub->add_option("--train-steps", train_steps, "Schedule training steps")->capture_default_str();
  }

  MixerConfig mixer(std::size_t num_prompts) const {
    MixerConfig m;
    m.num_prompts = num_prompts;
    m.total_steps = steps;
    m.strike = strike;
    m.rate = rate;
    m.score_scale = score_scale;
    m.strike_mode = strike_mode == "calibrated" ? StrikeMode::calibrated : StrikeMode::fixed;
    m.calibration_runs = calibration_runs;
    validate(m);
    return m;
  }

  DiffusionSchedule schedule() const {
    return build_schedule({beta_start, beta_end, train_steps, steps});
  }
};

json mixer_to_json(const MixerConfig& m) {
  return {{"num_prompts", m.num_prompts},
          {"total_steps", m.total_steps},
          {"strike", m.strike},
          {"rate", m.effective_rate()},
          {"score_scale", m.score_scale},
          {"strike_mode", m.strike_mode == StrikeMode::calibrated ? "calibrated" : "fixed"}};
}

std::string file_stem(const std::string& strategy_name) {
  std::string s = strategy_name;
  std::replace(s.begin(), s.end(), ':', '-');
  return s;
}

io::ToyFileConfig load_toy_config(const std::string& path) {
  if (path.empty()) return {default_toy_concepts(), 1, 0.0};
  return io::toy_config_from_json(io::read_json_file(path));
}

SimEnvConfig load_sim_env(const std::string& path) {
  if (path.empty()) return {};
  return io::sim_env_from_json(io::read_json_file(path));
}

std::vector<double> parse_k_values(const std::string& list, const std::string& range) {
  auto to_double = [](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("invalid number '" + std::string(s) + "' in K list");
    }
    return v;
  };
  std::vector<double> ks;
  if (!list.empty()) {
    std::string_view rest = list;
    while (true) {
      const auto comma = rest.find(',');
      ks.push_back(to_double(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  } else {
    const std::string_view r = range;
    const auto c1 = r.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : r.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw ConfigError("--k-range must be START:STOP:STEP");
    const double lo = to_double(r.substr(0, c1));
    const double hi = to_double(r.substr(c1 + 1, c2 - c1 - 1));
    const double step = to_double(r.substr(c2 + 1));
    if (!(step > 0.0) || hi < lo) throw ConfigError("--k-range needs STEP > 0 and STOP >= START");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) ks.push_back(lo + step * static_cast<double>(i));
  }
  for (double k : ks) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("K values must be finite and >= 0");
  }
  return ks;
}

double choice_agreement(std::span<const Trace> a, std::span<const Trace> b) {
  std::size_t same = 0, total = 0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t i = 0; i < a[r].decisions.size(); ++i) {
      same += a[r].decisions[i].chosen == b[r].decisions[i].chosen ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(same) / static_cast<double>(total);
}

std::vector<Trace> load_traces(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  std::vector<Trace> traces;
  for (const auto& f : files) {
    const json j = io::read_json_file(f);
    if (j.is_array()) {
      for (const auto& t : j) traces.push_back(io::trace_from_json(t));
    } else if (j.is_object() && j.contains("decisions")) {
      traces.push_back(io::trace_from_json(j));
    }
  }
  if (traces.empty()) throw ConfigError("no traces found in the given paths");
  return traces;
}

// Pulls `--config PATH` out of args and splices the matching section of the
// JSON file in right after the subcommand name, so explicit flags (which come
// later and use take-last semantics) override it.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  std::vector<std::string> rest;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config requires a path");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;

  const json cfg = io::read_json_file(config_path);
  if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
  std::set<std::string> names;
  for (const auto* sub : app.get_subcommands({})) names.insert(sub->get_name());
  for (const auto& [key, _] : cfg.items()) {
    if (key != "$schema" && !names.contains(key)) {
      throw ConfigError("config file: unknown section '" + key + "'");
    }
  }

  const auto pos = std::find_if(rest.begin(), rest.end(), [&](const std::string& a) {
    return names.contains(a);
  });
  if (pos == rest.end() || !cfg.contains(*pos)) return rest;

  CLI::App* sub = app.get_subcommand(*pos);
  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.at(*pos).items()) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw ConfigError("config file: unknown option '" + key + "' for '" + *pos + "'");
    }
    auto scalar = [&](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
      if (v.is_number()) return io::format_number(v.get<double>());
      throw ConfigError("config file: option '" + key + "' has an unsupported value type");
    };
    if (value.is_boolean()) {
      if (opt->get_items_expected_max() != 0) {
        throw ConfigError("config file: option '" + key + "' is not a flag");
      }
      if (value.get<bool>()) injected.push_back("--" + key);
      continue;
    }
    injected.push_back("--" + key);
    if (value.is_array()) {
      for (const auto& v : value) injected.push_back(scalar(v));
    } else {
      injected.push_back(scalar(value));
    }
  }
  rest.insert(pos + 1, injected.begin(), injected.end());
  return rest;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Black-Scholes prompt mixing: option pricing, DDIM schedules and strategy experiments",
               "bsmix"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_doc;
  app.add_option("--config", config_doc,
                 "JSON file whose '<subcommand>' object supplies flag defaults (docs/config.schema.json)");

  // price
  auto* price = app.add_subcommand("price", "Black-Scholes call price, optionally checked by Monte Carlo");
  OptionParams pp;
  std::vector<std::uint64_t> mc;
  price->add_option("--S", pp.spot, "Spot price")->required();
  price->add_option("--K", pp.strike, "Strike price")->required();
  price->add_option("--r", pp.rate, "Per-step rate")->capture_default_str();
  price->add_option("--sigma", pp.vol, "Per-step volatility")->capture_default_str();
  price->add_option("--t", pp.tte, "Steps to expiry")->required();
  price->add_option("--mc", mc, "Monte Carlo check: PATHS SEED")->expected(2);

  // schedule
  auto* schedule = app.add_subcommand("schedule", "Dump the scaled-linear DDIM schedule as CSV");
  ScheduleConfig sc;
  std::string schedule_out;
  schedule->add_option("--beta-start", sc.beta_start, "First beta")->capture_default_str();
  schedule->add_option("--beta-end", sc.beta_end, "Last beta")->capture_default_str();
  schedule->add_option("--train-steps", sc.num_train_steps, "Training steps")->capture_default_str();
  schedule->add_option("--infer-steps", sc.num_inference_steps, "Inference steps")
      ->capture_default_str();
  schedule->add_option("--out", schedule_out, "Output CSV (stdout when omitted)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Strategy tournament on the synthetic score environment");
  MixerOptions sim_mix;
  sim_mix.attach(simulate);
  std::string sim_env_path, sim_out;
  std::string sim_strategies = "black_scholes,clip_min,alternating,stepwise:12,lerp";
  std::size_t sim_seeds = 100;
  std::uint64_t sim_master = 0;
  simulate->add_option("--env-config", sim_env_path, "Environment JSON (initial_scores, gain, decay, noise_vol)");
  simulate->add_option("--strategies", sim_strategies,
                       "Comma list: black_scholes, clip_min[:forecast], alternating, stepwise:K, lerp, single:P")
      ->capture_default_str();
  simulate->add_option("--seeds", sim_seeds, "Runs per strategy")->capture_default_str();
  simulate->add_option("--seed", sim_master, "Master seed")->capture_default_str();
  simulate->add_option("--out", sim_out, "Output directory")->required();

  // toy
  auto* toy = app.add_subcommand("toy", "Run a strategy on the analytic Gaussian-mixture diffusion model");
  MixerOptions toy_mix;
  toy_mix.attach(toy);
  std::string toy_concepts, toy_strategy = "black_scholes", toy_out;
  std::size_t toy_seeds = 100;
  std::uint64_t toy_first_seed = 0;
  std::optional<std::size_t> toy_spp;
  std::optional<double> toy_eta;
  bool toy_svg = false;
  toy->add_option("--concepts", toy_concepts, "Concept JSON (concepts, samples_per_seed, eta)");
  toy->add_option("--strategy", toy_strategy, "Strategy name")->capture_default_str();
  toy->add_option("--seeds", toy_seeds, "Number of seeds")->capture_default_str();
  toy->add_option("--first-seed", toy_first_seed, "First seed")->capture_default_str();
  toy->add_option("--samples-per-seed", toy_spp, "Trajectories per seed (overrides the concept file)");
  toy->add_option("--eta", toy_eta, "DDIM stochasticity in [0,1] (overrides the concept file)");
  toy->add_flag("--svg", toy_svg, "Also write samples.svg");
  toy->add_option("--out", toy_out, "Output directory")->required();

  // sweep-k
  auto* sweep = app.add_subcommand("sweep-k", "Balance of the Black-Scholes controller as a function of K");
  MixerOptions sweep_mix;
  sweep_mix.attach(sweep);
  std::string sweep_env = "sim", sweep_env_path, sweep_concepts, sweep_list, sweep_range = "0:50:5",
              sweep_out;
  std::size_t sweep_seeds = 100;
  std::uint64_t sweep_master = 0;
  std::optional<std::size_t> sweep_spp;
  sweep->add_option("--env", sweep_env, "Environment: sim or toy")
      ->check(CLI::IsMember({"sim", "toy"}))
      ->capture_default_str();
  sweep->add_option("--env-config", sweep_env_path, "Sim environment JSON");
  sweep->add_option("--concepts", sweep_concepts, "Toy concept JSON");
  sweep->add_option("--samples-per-seed", sweep_spp, "Toy trajectories per seed");
  sweep->add_option("--k", sweep_list, "Comma list of K values (overrides --k-range)");
  sweep->add_option("--k-range", sweep_range, "START:STOP:STEP")->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "Seeds per K")->capture_default_str();
  sweep->add_option("--seed", sweep_master, "Master / first seed")->capture_default_str();
  sweep->add_option("--out", sweep_out, "Output directory")->required();

  // report
  auto* report = app.add_subcommand("report", "Summarize trace JSON files");
  std::vector<std::string> report_inputs;
  std::string report_out;
  report->add_option("--traces", report_inputs, "Trace files or directories")->required();
  report->add_option("--out", report_out, "Summary CSV (stdout when omitted)");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args, app);
  } catch (const std::exception& e) {
    print_error(err, "config_error", e.what());
    return kUsageError;
  }

  try {
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage_error", e.what());
    return kUsageError;
  }

  try {
    if (price->parsed()) {
      const auto r = bs_call_price(pp);
      out << "price=" << io::format_number(r.price) << '\n'
          << "d1=" << io::format_number(r.d1) << '\n'
          << "d2=" << io::format_number(r.d2) << '\n';
      if (!mc.empty()) {
        const auto est = mc_call_price(pp, static_cast<std::size_t>(mc[0]), mc[1]);
        const double diff = std::abs(est.estimate - r.price);
        out << "mc_estimate=" << io::format_number(est.estimate) << '\n'
            << "mc_stderr=" << io::format_number(est.std_error) << '\n'
            << "mc_abs_diff=" << io::format_number(diff) << '\n'
            << "mc_within_3se=" << (diff <= 3.0 * est.std_error ? "true" : "false") << '\n';
      }
    } else if (schedule->parsed()) {
      const auto csv = io::schedule_csv(build_schedule(sc));
      if (schedule_out.empty()) {
        out << csv;
      } else {
        io::write_file_atomic(schedule_out, csv);
      }
    } else if (simulate->parsed()) {
      const SimEnvConfig env = load_sim_env(sim_env_path);
      const auto strategies = parse_strategy_list(sim_strategies);
      const MixerConfig m = sim_mix.mixer(env.initial_scores.size());
      const auto sched = sim_mix.schedule();
      const auto result = run_tournament(env, strategies, m, sched, sim_seeds, sim_master);

      const fs::path dir(sim_out);
      io::write_file_atomic(dir / "summary.csv", io::summary_csv(result.summaries));
      for (std::size_t s = 0; s < strategies.size(); ++s) {
        for (std::size_t k = 0; k < result.traces[s].size(); ++k) {
          io::write_file_atomic(
              dir / "traces" / fmt::format("{}_{:04}.json", file_stem(strategies[s].name()), k),
              io::trace_to_json(result.traces[s][k]).dump() + "\n");
        }
      }
      const json run_info{{"mixer", mixer_to_json(result.mixer)},
                          {"env", io::sim_env_to_json(env)},
                          {"seeds", sim_seeds},
                          {"master_seed", sim_master}};
      io::write_file_atomic(dir / "run.json", run_info.dump(2) + "\n");
      out << io::summary_csv(result.summaries);
    } else if (toy->parsed()) {
      auto tf = load_toy_config(toy_concepts);
      ToyRunConfig cfg{tf.concepts, toy_mix.schedule(), toy_spp.value_or(tf.samples_per_seed),
                       toy_eta.value_or(tf.eta)};
      MixerConfig m = toy_mix.mixer(cfg.concepts.size());
      {
        ToyDiffusionEnvironment calib(cfg.concepts, cfg.schedule, cfg.eta);
        m = resolve_strike(calib, m, cfg.schedule, toy_first_seed);
      }
      const auto strategy = Strategy::parse(toy_strategy);
      const auto result = generate_many(cfg, strategy, m, toy_first_seed, toy_seeds);
      const auto summary = aggregate(result.traces, cfg.concepts.size());

      const fs::path dir(toy_out);
      io::write_file_atomic(dir / "samples.csv", io::toy_samples_csv(result.samples, cfg.concepts));
      json traces = json::array();
      for (const auto& t : result.traces) traces.push_back(io::trace_to_json(t));
      io::write_file_atomic(dir / "traces.json", traces.dump() + "\n");
      io::write_file_atomic(dir / "summary.csv", io::summary_csv(summary));
      json concepts = json::array();
      for (const auto& c : cfg.concepts) concepts.push_back(io::concept_to_json(c));
      const json run_info{{"mixer", mixer_to_json(m)},
                          {"concepts", concepts},
                          {"samples_per_seed", cfg.samples_per_seed},
                          {"eta", cfg.eta},
                          {"seeds", toy_seeds},
                          {"first_seed", toy_first_seed},
                          {"strategy", strategy.name()}};
      io::write_file_atomic(dir / "run.json", run_info.dump(2) + "\n");
      if (toy_svg) {
        io::write_file_atomic(dir / "samples.svg",
                              svg::scatter(result.samples, cfg.concepts,
                                           "final samples: " + strategy.name()));
      }
      out << io::summary_csv(summary);
    } else if (sweep->parsed()) {
      const auto ks = parse_k_values(sweep_list, sweep_range);
      MixerOptions fixed = sweep_mix;
      fixed.strike_mode = "fixed";
      const auto sched = fixed.schedule();

      std::function<std::vector<Trace>(const Strategy&, const MixerConfig&)> run_all;
      std::size_t n = 0;
      SimEnvConfig env;
      ToyRunConfig toy_cfg;
      if (sweep_env == "sim") {
        env = load_sim_env(sweep_env_path);
        n = env.initial_scores.size();
        run_all = [&](const Strategy& s, const MixerConfig& m) {
          const Strategy one[] = {s};
          return std::move(run_tournament(env, one, m, sched, sweep_seeds, sweep_master).traces[0]);
        };
      } else {
        auto tf = load_toy_config(sweep_concepts);
        toy_cfg = {tf.concepts, sched, sweep_spp.value_or(tf.samples_per_seed), tf.eta};
        n = toy_cfg.concepts.size();
        run_all = [&](const Strategy& s, const MixerConfig& m) {
          return generate_many(toy_cfg, s, m, sweep_master, sweep_seeds).traces;
        };
      }

      MixerConfig m = fixed.mixer(n);
      const auto baseline = run_all(Strategy::clip_min(ScoreWiring::forecast), m);
      std::string csv =
          "K,seeds,balance_mean,balance_se,combined_mean,combined_se,entropy_mean,clip_min_agreement\n";
      std::vector<double> bal, bal_se;
      for (double k : ks) {
        m.strike = k;
        const auto traces = run_all(Strategy::black_scholes(), m);
        const auto agg = aggregate(traces, n).front();
        csv += fmt::format("{},{},{},{},{},{},{},{}\n", io::format_number(k), agg.seeds,
                           io::format_number(agg.balance_mean), io::format_number(agg.balance_se),
                           io::format_number(agg.combined_mean), io::format_number(agg.combined_se),
                           io::format_number(agg.entropy_mean),
                           io::format_number(choice_agreement(traces, baseline)));
        bal.push_back(agg.balance_mean);
        bal_se.push_back(agg.balance_se);
      }
      const fs::path dir(sweep_out);
      io::write_file_atomic(dir / "sweep_k.csv", csv);
      io::write_file_atomic(dir / "sweep_k.svg",
                            svg::curve(ks, bal, bal_se, "balance vs strike (" + sweep_env + ")",
                                       "strike K", "balance (mean final min score)"));
      out << csv;
    } else if (report->parsed()) {
      const auto traces = load_traces(report_inputs);
      const std::size_t n = traces.front().final_scores.size();
      for (const auto& t : traces) {
        if (t.final_scores.size() != n) throw ConfigError("traces disagree on the number of prompts");
      }
      const auto csv = io::summary_csv(aggregate(traces, n));
      if (report_out.empty()) {
        out << csv;
      } else {
        io::write_file_atomic(report_out, csv);
      }
    }
  } catch (const ConfigError& e) {
    print_error(err, "config_error", e.what());
    return kUsageError;
  } catch (const DomainError& e) {
    print_error(err, "domain_error", e.what());
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    print_error(err, "runtime_error", e.what());
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace bsmix::cli
