#include "bsmix/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "bsmix/error.hpp"

namespace bsmix::io {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
    }
  }
}

double get_number(const json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw ConfigError(std::string(what) + ": missing '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(std::string(what) + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected a nonempty array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(std::string(what) + ": expected numbers");
    v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected a nonempty matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = vector_from_json(j[static_cast<std::size_t>(r)], what);
    if (row.size() != rows) throw ConfigError(std::string(what) + ": covariance must be square");
    m.row(r) = row.transpose();
  }
  return m;
}

json conditioning_to_json(Conditioning c) { return c ? json(*c) : json(nullptr); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

json trace_to_json(const Trace& trace) {
  json decisions = json::array();
  for (const auto& d : trace.decisions) {
    decisions.push_back({{"step", d.step},
                         {"conditioning", conditioning_to_json(d.conditioning)},
                         {"raw_scores", d.raw_scores},
                         {"spot_prices", d.spot_prices},
                         {"sigma", d.sigma},
                         {"tte", d.tte},
                         {"bs_scores", d.bs_scores},
                         {"chosen", d.chosen}});
  }
  return {{"version", kTraceFormatVersion},
          {"strategy", trace.strategy},
          {"seed", trace.seed},
          {"decisions", std::move(decisions)},
          {"final_scores", trace.final_scores}};
}

Trace trace_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kTraceFormatVersion) {
      throw ConfigError("unsupported trace version");
    }
    Trace t;
    t.strategy = j.at("strategy").get<std::string>();
    t.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& dj : j.at("decisions")) {
      StepDecision d;
      d.step = dj.at("step").get<std::size_t>();
      const auto& c = dj.at("conditioning");
      d.conditioning = c.is_null() ? kCombined : Conditioning(c.get<std::size_t>());
      d.raw_scores = dj.at("raw_scores").get<std::vector<double>>();
      d.spot_prices = dj.at("spot_prices").get<std::vector<double>>();
      d.sigma = dj.at("sigma").get<double>();
      d.tte = dj.at("tte").get<double>();
      d.bs_scores = dj.at("bs_scores").get<std::vector<double>>();
      d.chosen = dj.at("chosen").get<std::size_t>();
      t.decisions.push_back(std::move(d));
    }
    t.final_scores = j.at("final_scores").get<std::vector<double>>();
    return t;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed trace JSON: ") + e.what());
  }
}

std::string trace_to_csv(const Trace& trace) {
  const std::size_t n = trace.final_scores.size();
  std::string out = "step,conditioning,sigma,tte,chosen";
  for (const char* prefix : {"raw_", "spot_", "bs_"}) {
    for (std::size_t p = 0; p < n; ++p) out += fmt::format(",{}{}", prefix, p);
  }
  out += '\n';
  for (const auto& d : trace.decisions) {
    out += fmt::format("{},{},{},{},{}", d.step,
                       d.conditioning ? std::to_string(*d.conditioning) : "combined",
                       format_number(d.sigma), format_number(d.tte), d.chosen);
    for (const auto* v : {&d.raw_scores, &d.spot_prices, &d.bs_scores}) {
      for (double x : *v) out += "," + format_number(x);
    }
    out += '\n';
  }
  return out;
}

std::string summary_csv(std::span<const AggregateSummary> rows) {
  std::string out = std::string(kSummaryCsvHeader) + '\n';
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.strategy, r.seeds, format_number(r.balance_mean),
                       format_number(r.balance_se), format_number(r.combined_mean),
                       format_number(r.combined_se), format_number(r.entropy_mean));
  }
  return out;
}

std::string schedule_csv(const DiffusionSchedule& s) {
  std::string out = std::string(kScheduleCsvHeader) + '\n';
  for (std::size_t i = 0; i < s.num_inference_steps(); ++i) {
    const auto t = s.inference_timesteps[i];
    out += fmt::format("{},{},{},{},{},{}\n", i, t, format_number(s.betas[t]),
                       format_number(s.alpha_bars[t]), format_number(s.variances[i]),
                       format_number(sigma_at(s, i)));
  }
  return out;
}

std::string toy_samples_csv(std::span<const ToySample> samples,
                            std::span<const GaussianMixtureConcept> concepts) {
  const std::size_t d = concepts.empty() ? 0 : concepts[0].dim();
  std::string out = "seed,sample";
  if (d == 2) {
    out += ",x,y";
  } else {
    for (std::size_t k = 0; k < d; ++k) out += fmt::format(",x{}", k);
  }
  for (const auto& c : concepts) out += ",score_" + c.label;
  out += '\n';
  for (const auto& s : samples) {
    out += fmt::format("{},{}", s.seed, s.sample);
    for (Eigen::Index k = 0; k < s.point.size(); ++k) out += "," + format_number(s.point[k]);
    for (double v : s.scores) out += "," + format_number(v);
    out += '\n';
  }
  return out;
}

SimEnvConfig sim_env_from_json(const json& j) {
  reject_unknown_keys(j, {"initial_scores", "gain", "decay", "noise_vol"}, "sim env config");
  SimEnvConfig env;
  if (!j.contains("initial_scores") || !j.at("initial_scores").is_array()) {
    throw ConfigError("sim env config: 'initial_scores' must be an array");
  }
  env.initial_scores.clear();
  for (const auto& v : j.at("initial_scores")) {
    if (!v.is_number()) throw ConfigError("sim env config: initial_scores must be numbers");
    env.initial_scores.push_back(v.get<double>());
  }
  env.gain = get_number(j, "gain", "sim env config");
  env.decay = get_number(j, "decay", "sim env config");
  env.noise_vol = get_number(j, "noise_vol", "sim env config");
  validate(env);
  return env;
}

json sim_env_to_json(const SimEnvConfig& env) {
  return {{"initial_scores", env.initial_scores},
          {"gain", env.gain},
          {"decay", env.decay},
          {"noise_vol", env.noise_vol}};
}

GaussianMixtureConcept concept_from_json(const json& j) {
  reject_unknown_keys(j, {"label", "weights", "means", "covariances"}, "concept");
  GaussianMixtureConcept c;
  if (!j.contains("label") || !j.at("label").is_string()) {
    throw ConfigError("concept: 'label' must be a string");
  }
  c.label = j.at("label").get<std::string>();
  for (const char* key : {"weights", "means", "covariances"}) {
    if (!j.contains(key) || !j.at(key).is_array()) {
      throw ConfigError("concept '" + c.label + "': '" + key + "' must be an array");
    }
  }
  for (const auto& w : j.at("weights")) {
    if (!w.is_number()) throw ConfigError("concept '" + c.label + "': weights must be numbers");
    c.weights.push_back(w.get<double>());
  }
  for (const auto& m : j.at("means")) c.means.push_back(vector_from_json(m, "concept mean"));
  for (const auto& s : j.at("covariances")) {
    c.covariances.push_back(matrix_from_json(s, "concept covariance"));
  }
  validate(c);
  return c;
}

json concept_to_json(const GaussianMixtureConcept& c) {
  json means = json::array();
  json covs = json::array();
  for (const auto& m : c.means) means.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  for (const auto& s : c.covariances) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(s.cols()));
      for (Eigen::Index k = 0; k < s.cols(); ++k) row[static_cast<std::size_t>(k)] = s(r, k);
      rows.push_back(row);
    }
    covs.push_back(rows);
  }
  return {{"label", c.label}, {"weights", c.weights}, {"means", means}, {"covariances", covs}};
}

ToyFileConfig toy_config_from_json(const json& j) {
  reject_unknown_keys(j, {"concepts", "samples_per_seed", "eta"}, "toy config");
  ToyFileConfig cfg;
  if (!j.contains("concepts") || !j.at("concepts").is_array()) {
    throw ConfigError("toy config: 'concepts' must be an array");
  }
  for (const auto& c : j.at("concepts")) cfg.concepts.push_back(concept_from_json(c));
  if (cfg.concepts.size() < 2) throw ConfigError("toy config: at least 2 concepts required");
  if (j.contains("samples_per_seed")) {
    if (!j.at("samples_per_seed").is_number_unsigned()) {
      throw ConfigError("toy config: 'samples_per_seed' must be a positive integer");
    }
    cfg.samples_per_seed = j.at("samples_per_seed").get<std::size_t>();
    if (cfg.samples_per_seed == 0) throw ConfigError("toy config: samples_per_seed must be >= 1");
  }
  if (j.contains("eta")) {
    cfg.eta = get_number(j, "eta", "toy config");
    if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) throw ConfigError("toy config: eta must lie in [0, 1]");
  }
  return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace bsmix::io
