#include "smc2/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "smc2/errors.hpp"

namespace smc2 {

namespace {

using nlohmann::json;

// Reads members of one JSON object, remembering which keys were used so the
// rest can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const json& at(const std::string& key) {
    used_.insert(key);
    return obj_.at(key);
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(key_path(key) + ": expected a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(key_path(key) + ": expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(key_path(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(key_path(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(key_path(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) throw ConfigError(key_path(key) + ": unknown key");
    }
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void wrap(const std::string& path, const auto& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

void read_data(ObjectReader& root, DataConfig& data, const std::filesystem::path& base_dir) {
  data.model = root.string("model", data.model);
  if (data.model != "sv" && data.model != "lgssm") {
    throw ConfigError("model: expected \"sv\" or \"lgssm\", got \"" + data.model + "\"");
  }
  if (root.has("data")) {
    std::filesystem::path p = root.string("data", "");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    data.path = p.lexically_normal().string();
  }
  wrap("transform", [&] { data.transform = transform_from_string(root.string("transform", "none")); });
  if (root.has("synthetic")) {
    ObjectReader s(root.at("synthetic"), "synthetic");
    data.synthetic_T = s.count("T", data.synthetic_T);
    if (data.synthetic_T < 1) throw ConfigError("synthetic.T: must be >= 1");
    if (s.has("theta")) data.synthetic_theta = s.numbers("theta");
    data.synthetic_seed = s.count("seed", data.synthetic_seed);
    s.reject_unknown();
  }
  if (root.has("lgssm")) {
    ObjectReader l(root.at("lgssm"), "lgssm");
    data.lgssm_sigma_x = l.number("sigma_x", data.lgssm_sigma_x);
    data.lgssm_sigma_y = l.number("sigma_y", data.lgssm_sigma_y);
    if (!(data.lgssm_sigma_x > 0.0)) throw ConfigError("lgssm.sigma_x: must be positive");
    if (!(data.lgssm_sigma_y > 0.0)) throw ConfigError("lgssm.sigma_y: must be positive");
    l.reject_unknown();
  }
}

void read_sampler(ObjectReader& root, Smc2Config& c, bool& tau_given) {
  c.n_theta = root.count("n_theta", c.n_theta);
  c.n_x_init = root.count("n_x_init", c.n_x_init);
  c.ess_min_frac = root.number("ess_min_frac", c.ess_min_frac);
  wrap("variant", [&] { c.variant = variant_from_string(root.string("variant", "c")); });
  tau_given = root.has("tau");
  c.tau = root.number("tau", c.tau);
  c.pmmh_steps_after_pg = root.count("pmmh_steps_after_pg", c.pmmh_steps_after_pg);
  c.pmmh_accept_threshold = root.number("pmmh_accept_threshold", c.pmmh_accept_threshold);
  if (root.has("proposal_scale")) c.proposal_scale = root.number("proposal_scale", 0.0);
  c.seed = root.count("seed", c.seed);
  if (root.has("n_x_bounds")) {
    const auto b = root.numbers("n_x_bounds");
    if (b.size() != 2 || b[0] < 0 || b[1] < 0 || b[0] != std::floor(b[0]) || b[1] != std::floor(b[1])) {
      throw ConfigError("n_x_bounds: expected [min, max] with nonnegative integers");
    }
    c.n_x_min = static_cast<std::size_t>(b[0]);
    c.n_x_max = static_cast<std::size_t>(b[1]);
  }
  c.pmmh_passes = root.count("pmmh_passes", c.pmmh_passes);
  c.gibbs_sweeps = root.count("gibbs_sweeps", c.gibbs_sweeps);
  c.workers = root.count("workers", c.workers);
  {
    const std::string clock = root.string("clock", "wall");
    if (clock == "wall") {
      c.clock = ClockMode::Wall;
    } else if (clock == "work") {
      c.clock = ClockMode::Work;
    } else {
      throw ConfigError("clock: expected \"wall\" or \"work\", got \"" + clock + "\"");
    }
  }
  if (root.has("backfit")) {
    ObjectReader b(root.at("backfit"), "backfit");
    c.backfit.df = b.number("df", c.backfit.df);
    c.backfit.max_iter = b.count("max_iter", c.backfit.max_iter);
    c.backfit.tol = b.number("tol", c.backfit.tol);
    if (c.backfit.max_iter < 1) throw ConfigError("backfit.max_iter: must be >= 1");
    if (!(c.backfit.tol > 0.0)) throw ConfigError("backfit.tol: must be positive");
    b.reject_unknown();
  }
  c.winsor_sd = root.number("winsor_sd", c.winsor_sd);
}

void read_experiment(ObjectReader& root, ExperimentConfig& e) {
  if (!root.has("experiment")) return;
  ObjectReader x(root.at("experiment"), "experiment");
  if (x.has("variants")) {
    const json& v = x.at("variants");
    if (!v.is_array()) throw ConfigError("experiment.variants: expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = "experiment.variants[" + std::to_string(i) + "]";
      if (!v[i].is_string()) throw ConfigError(p + ": expected a string");
      wrap(p, [&] { e.variants.push_back(variant_from_string(v[i].get<std::string>())); });
    }
  }
  if (x.has("seeds")) {
    const json& s = x.at("seeds");
    if (!s.is_array() || s.empty()) throw ConfigError("experiment.seeds: expected a nonempty array");
    e.seeds.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_unsigned()) {
        throw ConfigError("experiment.seeds[" + std::to_string(i) + "]: expected a nonnegative integer");
      }
      e.seeds.push_back(s[i].get<std::uint64_t>());
    }
  }
  e.replicates = x.count("replicates", e.replicates);
  if (e.replicates < 1) throw ConfigError("experiment.replicates: must be >= 1");
  if (x.has("tau_sweep")) {
    e.tau_sweep = x.numbers("tau_sweep");
    for (double tau : e.tau_sweep) {
      if (!(tau > 0.0)) throw ConfigError("experiment.tau_sweep: every tau must be positive");
    }
  }
  e.output = x.string("output", e.output);
  x.reject_unknown();
}

}  // namespace

std::string_view to_string(Transform t) noexcept {
  return t == Transform::None ? "none" : "log_returns_100";
}

Transform transform_from_string(std::string_view s) {
  if (s == "none") return Transform::None;
  if (s == "log_returns_100") return Transform::LogReturns100;
  throw ConfigError("unknown transform '" + std::string(s) + "' (expected none or log_returns_100)");
}

RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON at line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": " + e.what());
  }
  RunConfig config;
  ObjectReader reader(root, "");
  read_data(reader, config.data, base_dir);
  bool tau_given = false;
  read_sampler(reader, config.smc2, tau_given);
  read_experiment(reader, config.experiment);
  reader.reject_unknown();

  config.smc2.validate();
  const auto& vs = config.experiment.variants;
  const bool only_a = vs.empty() ? config.smc2.variant == Variant::A_StandardExchange
                                 : std::all_of(vs.begin(), vs.end(), [](Variant v) {
                                     return v == Variant::A_StandardExchange;
                                   });
  if (tau_given && only_a) config.warnings.emplace_back("tau is unused by variant A");
  if (config.data.model == "lgssm" && !config.data.synthetic_theta.empty() && config.data.synthetic_theta.size() != 1) {
    throw ConfigError("synthetic.theta: the lgssm model takes one coordinate (rho)");
  }
  if (config.data.model == "sv" && !config.data.synthetic_theta.empty() && config.data.synthetic_theta.size() != 3) {
    throw ConfigError("synthetic.theta: the sv model takes three coordinates (mu, rho, sigma)");
  }
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.parent_path());
}

nlohmann::json config_to_json(const RunConfig& config) {
  const Smc2Config& c = config.smc2;
  const DataConfig& d = config.data;
  const ExperimentConfig& e = config.experiment;
  json j;
  j["model"] = d.model;
  j["data"] = d.path ? json(*d.path) : json(nullptr);
  j["transform"] = std::string(to_string(d.transform));
  j["synthetic"] = {{"T", d.synthetic_T}, {"theta", d.synthetic_theta}, {"seed", d.synthetic_seed}};
  j["lgssm"] = {{"sigma_x", d.lgssm_sigma_x}, {"sigma_y", d.lgssm_sigma_y}};
  j["n_theta"] = c.n_theta;
  j["n_x_init"] = c.n_x_init;
  j["ess_min_frac"] = c.ess_min_frac;
  j["variant"] = std::string(variant_letter(c.variant));
  j["tau"] = c.tau;
  j["pmmh_steps_after_pg"] = c.pmmh_steps_after_pg;
  j["pmmh_accept_threshold"] = c.pmmh_accept_threshold;
  j["proposal_scale"] = c.proposal_scale ? json(*c.proposal_scale) : json(nullptr);
  j["seed"] = c.seed;
  j["n_x_bounds"] = {c.n_x_min, c.n_x_max};
  j["pmmh_passes"] = c.pmmh_passes;
  j["gibbs_sweeps"] = c.gibbs_sweeps;
  j["workers"] = c.workers;
  j["clock"] = c.clock == ClockMode::Wall ? "wall" : "work";
  j["backfit"] = {{"df", c.backfit.df}, {"max_iter", c.backfit.max_iter}, {"tol", c.backfit.tol}};
  j["winsor_sd"] = c.winsor_sd;
  json variants = json::array();
  for (Variant v : e.variants) variants.push_back(std::string(variant_letter(v)));
  j["experiment"] = {{"variants", variants},
                     {"seeds", e.seeds},
                     {"replicates", e.replicates},
                     {"tau_sweep", e.tau_sweep},
                     {"output", e.output}};
  return j;
}

std::size_t workers_from_env(std::size_t fallback) {
  const char* raw = std::getenv("SMC2_WORKERS");
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("SMC2_WORKERS: not an integer: '") + raw + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace smc2
