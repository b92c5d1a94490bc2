#include "smc2/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "smc2/errors.hpp"
#include "smc2/models.hpp"
#include "smc2/trace_io.hpp"

#ifndef SMC2_BUILD_ID
#define SMC2_BUILD_ID "unknown"
#endif

namespace smc2 {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& field) {
  const std::string f = trim(field);
  if (f.empty()) return std::nullopt;
  try {
    const double v = parse_number(f);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const InputError&) {
    return std::nullopt;
  }
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(replicate) + 1));
  splitmix64(s);
  return splitmix64(s);
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  return out;
}

void write_figure_header(std::ostream& os) {
  write_schema_line(os, kFigureSchema);
  os << "variant,seed,t,metric,value\n";
}

void figure_row(std::ostream& os, const std::string& label, const std::string& seed, std::size_t t,
                const std::string& metric, double value) {
  os << label << ',' << seed << ',' << t << ',' << metric << ',' << format_number(value) << '\n';
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return kNaN;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

struct RunRecord {
  RunSpec spec;
  std::vector<TraceRow> trace;
  std::vector<double> weights;
  std::vector<Theta> thetas;
  bool ok = false;
  bool completed = false;
  std::string failure;
  std::string trace_file;
  std::string posterior_file;
};

json quantile_json(const QuantileSummary& q) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"n", q.n}, {"median", num(q.median)}, {"q1", num(q.q1)}, {"q3", num(q.q3)}, {"iqr", num(q.iqr)}};
}

}  // namespace

Dataset ingest_returns(std::istream& in, Transform transform) {
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv_line(line);
    const std::optional<double> v = to_double(fields.back());
    if (!v) {
      if (first) {
        first = false;
        continue;
      }
      throw InputError("row " + std::to_string(row) + ": not a number: '" + trim(fields.back()) + "'");
    }
    first = false;
    values.push_back(*v);
  }
  Dataset data;
  if (transform == Transform::None) {
    data.y = std::move(values);
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0)) throw InputError("price " + std::to_string(i + 1) + " is not positive");
    }
    for (std::size_t i = 1; i < values.size(); ++i) data.y.push_back(100.0 * (std::log(values[i]) - std::log(values[i - 1])));
  }
  if (data.empty()) throw InputError("empty dataset: no observations after the transform");
  return data;
}

Dataset ingest_returns(const fs::path& csv_path, Transform transform) {
  std::ifstream in(csv_path);
  if (!in) throw InputError("cannot open data file '" + csv_path.string() + "'");
  try {
    return ingest_returns(in, transform);
  } catch (const InputError& e) {
    throw InputError(csv_path.string() + ": " + e.what());
  }
}

std::shared_ptr<const StateSpaceModel> make_model(const DataConfig& data) {
  if (data.model == "sv") return sv_spec();
  if (data.model == "lgssm") return lgssm_spec(data.lgssm_sigma_x, data.lgssm_sigma_y);
  throw ConfigError("model: unknown model '" + data.model + "'");
}

Theta default_synthetic_theta(const StateSpaceModel& model) {
  if (model.name() == "sv") return Theta{0.0, 0.9, 0.3};
  if (model.name() == "lgssm") return Theta{0.9};
  throw UnsupportedModelError("no default synthetic parameter for model '" + std::string(model.name()) + "'");
}

Dataset load_dataset(const DataConfig& data, const StateSpaceModel& model) {
  if (data.path) return ingest_returns(fs::path(*data.path), data.transform);
  const Theta theta = data.synthetic_theta.empty() ? default_synthetic_theta(model) : Theta(data.synthetic_theta);
  Rng rng(data.synthetic_seed);
  return simulate(model, theta, data.synthetic_T, rng).data;
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  write_schema_line(os, kDataSchema);
  os << "y\n";
  for (double v : data.y) os << format_number(v) << '\n';
}

std::vector<RunSpec> plan_runs(const RunConfig& config) {
  const ExperimentConfig& e = config.experiment;
  std::vector<Variant> variants = e.variants;
  if (variants.empty()) variants.push_back(config.smc2.variant);
  std::vector<RunSpec> out;
  auto add = [&](const std::string& label, Variant v, double tau) {
    for (std::uint64_t seed : e.seeds) {
      for (std::size_t r = 0; r < e.replicates; ++r) {
        RunSpec s;
        s.label = label;
        s.variant = v;
        s.tau = tau;
        s.seed = seed;
        s.replicate = r;
        s.run_seed = e.replicates == 1 ? seed : replicate_seed(seed, r);
        s.seed_tag = e.replicates == 1 ? std::to_string(seed) : std::to_string(seed) + "r" + std::to_string(r);
        out.push_back(s);
      }
    }
  };
  for (Variant v : variants) add(std::string(variant_letter(v)), v, config.smc2.tau);
  for (double tau : e.tau_sweep) add("c_tau" + format_number(tau), Variant::C_FullPG, tau);
  return out;
}

QuantileSummary quantile_summary(std::vector<double> values) {
  QuantileSummary q;
  q.n = values.size();
  if (values.empty()) {
    q.median = q.q1 = q.q3 = q.iqr = kNaN;
    return q;
  }
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  q.median = at(0.5);
  q.q1 = at(0.25);
  q.q3 = at(0.75);
  q.iqr = q.q3 - q.q1;
  return q;
}

std::vector<EvidenceVarianceRow> evidence_variance_table(const std::vector<std::vector<TraceRow>>& traces) {
  std::vector<EvidenceVarianceRow> rows;
  if (traces.empty()) return rows;
  std::size_t common = std::numeric_limits<std::size_t>::max();
  for (const auto& tr : traces) common = std::min(common, tr.size());
  for (std::size_t i = 0; i < common; ++i) {
    std::vector<double> le;
    double elapsed = 0.0;
    for (const auto& tr : traces) {
      le.push_back(tr[i].log_evidence);
      elapsed += tr[i].elapsed_s;
    }
    EvidenceVarianceRow r;
    r.t = traces.front()[i].t;
    r.runs = traces.size();
    r.var_log_evidence = sample_variance(le);
    r.mean_elapsed_s = elapsed / static_cast<double>(traces.size());
    r.product = r.var_log_evidence * r.mean_elapsed_s;
    rows.push_back(r);
  }
  return rows;
}

ExperimentOutcome run_experiment(const RunConfig& config, const ExperimentOptions& options) {
  const fs::path out = options.out_dir.empty() ? fs::path(config.experiment.output) : options.out_dir;
  const auto model = make_model(config.data);
  const Dataset data = load_dataset(config.data, *model);
  const std::vector<RunSpec> plan = plan_runs(config);
  const std::size_t pool = std::max<std::size_t>(1, options.workers);
  const bool run_level = plan.size() > 1;

  std::vector<RunRecord> records(plan.size());
  std::mutex log_mutex;
  parallel_for(plan.size(), run_level ? pool : 1, [&](std::size_t i) {
    RunRecord& rec = records[i];
    rec.spec = plan[i];
    const std::string stem = rec.spec.label + "_seed" + rec.spec.seed_tag;
    rec.trace_file = "traces/trace_" + stem + ".csv";
    rec.posterior_file = "posterior/posterior_" + stem + ".csv";
    Smc2Config c = config.smc2;
    c.variant = rec.spec.variant;
    c.tau = rec.spec.tau;
    c.seed = rec.spec.run_seed;
    c.workers = run_level ? 1 : pool;
    try {
      RunResult result = run(c, *model, data);
      rec.trace = std::move(result.state.trace);
      rec.weights = result.state.normalized_weights();
      for (const Island& island : result.state.islands) rec.thetas.push_back(island.theta);
      rec.completed = result.completed;
      rec.failure = result.failure;
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.failure = e.what();
    }
    {
      auto os = open_out(out / rec.trace_file);
      write_trace_csv(os, rec.trace);
    }
    {
      auto os = open_out(out / rec.posterior_file);
      write_schema_line(os, kPosteriorSchema);
      os << "weight";
      for (const auto& name : model->theta_names()) os << ',' << name;
      os << '\n';
      for (std::size_t m = 0; m < rec.thetas.size(); ++m) {
        os << format_number(rec.weights[m]);
        for (double v : rec.thetas[m].values()) os << ',' << format_number(v);
        os << '\n';
      }
    }
    if (options.log != nullptr) {
      std::lock_guard lock(log_mutex);
      *options.log << "run " << stem << ": "
                   << (rec.ok && rec.completed ? "ok" : "failed (" + rec.failure + ")") << '\n';
    }
  });

  // Figure tables, written by this thread only.
  std::vector<std::string> labels;
  for (const auto& r : records) {
    if (std::find(labels.begin(), labels.end(), r.spec.label) == labels.end()) labels.push_back(r.spec.label);
  }
  const auto names = model->theta_names();
  {
    auto fig2 = open_out(out / "fig2_nx.csv");
    auto fig4 = open_out(out / "fig4_acceptance.csv");
    auto fig5 = open_out(out / "fig5_posterior.csv");
    write_figure_header(fig2);
    write_figure_header(fig4);
    write_figure_header(fig5);
    for (const auto& r : records) {
      for (const TraceRow& row : r.trace) {
        figure_row(fig2, r.spec.label, r.spec.seed_tag, row.t, "n_x", static_cast<double>(row.n_x));
        if (row.pmmh_attempts > 0) {
          figure_row(fig4, r.spec.label, r.spec.seed_tag, row.t, "acceptance",
                     static_cast<double>(row.pmmh_accepts) / static_cast<double>(row.pmmh_attempts));
        }
      }
      if (r.ok && r.completed && !r.trace.empty()) {
        for (std::size_t j = 0; j < names.size(); ++j) {
          double mean = 0.0;
          for (std::size_t m = 0; m < r.thetas.size(); ++m) mean += r.weights[m] * r.thetas[m][j];
          figure_row(fig5, r.spec.label, r.spec.seed_tag, r.trace.back().t, "mean_" + names[j], mean);
        }
      }
    }
  }
  {
    auto fig3 = open_out(out / "fig3_evidence_variance.csv");
    write_figure_header(fig3);
    auto emit = [&](const std::string& label, const std::string& seed, const std::vector<std::vector<TraceRow>>& tr) {
      for (const auto& row : evidence_variance_table(tr)) {
        figure_row(fig3, label, seed, row.t, "var_log_evidence", row.var_log_evidence);
        figure_row(fig3, label, seed, row.t, "mean_elapsed_s", row.mean_elapsed_s);
        figure_row(fig3, label, seed, row.t, "var_x_elapsed", row.product);
      }
    };
    for (const auto& label : labels) {
      std::vector<std::vector<TraceRow>> all;
      std::map<std::uint64_t, std::vector<std::vector<TraceRow>>> blocks;
      std::vector<std::uint64_t> block_order;
      for (const auto& r : records) {
        if (r.spec.label != label || !r.ok || !r.completed) continue;
        all.push_back(r.trace);
        if (!blocks.count(r.spec.seed)) block_order.push_back(r.spec.seed);
        blocks[r.spec.seed].push_back(r.trace);
      }
      emit(label, "all", all);
      if (config.experiment.replicates > 1) {
        for (std::uint64_t s : block_order) emit(label, std::to_string(s), blocks[s]);
      }
    }
  }

  ExperimentOutcome outcome;
  outcome.runs = records.size();
  json runs = json::array();
  for (const auto& r : records) {
    const bool good = r.ok && r.completed;
    if (!good) ++outcome.failed;
    json j = {{"label", r.spec.label},
              {"variant", std::string(variant_letter(r.spec.variant))},
              {"tau", r.spec.tau},
              {"seed", r.spec.seed},
              {"replicate", r.spec.replicate},
              {"run_seed", r.spec.run_seed},
              {"seed_tag", r.spec.seed_tag},
              {"trace", r.trace_file},
              {"posterior", r.posterior_file},
              {"status", good ? "ok" : "failed"}};
    if (!good) j["failure"] = r.failure;
    runs.push_back(j);
  }
  json manifest = {{"schema", std::string(kManifestSchema)},
                   {"build", SMC2_BUILD_ID},
                   {"config", config_to_json(config)},
                   {"seeds", config.experiment.seeds},
                   {"warnings", config.warnings},
                   {"observations", data.size()},
                   {"runs", runs},
                   {"figures",
                    {{"fig2", "fig2_nx.csv"},
                     {"fig3", "fig3_evidence_variance.csv"},
                     {"fig4", "fig4_acceptance.csv"},
                     {"fig5", "fig5_posterior.csv"}}}};
  outcome.manifest = out / "manifest.json";
  auto os = open_out(outcome.manifest);
  os << manifest.dump(2) << '\n';
  return outcome;
}

json summarize(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw InputError("no manifest.json in '" + dir.string() + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw InputError("manifest.json: " + std::string(e.what()));
  }
  struct Group {
    std::vector<double> final_nx;
    std::vector<double> acceptance;
    std::vector<std::vector<TraceRow>> all;
    std::map<std::uint64_t, std::vector<std::vector<TraceRow>>> blocks;
  };
  std::vector<std::string> order;
  std::map<std::string, Group> groups;
  std::size_t replicates = manifest.at("config").at("experiment").at("replicates").get<std::size_t>();
  for (const auto& r : manifest.at("runs")) {
    if (r.at("status") != "ok") continue;
    const std::string label = r.at("label").get<std::string>();
    std::ifstream tf(dir / r.at("trace").get<std::string>());
    if (!tf) throw InputError("missing trace file " + r.at("trace").get<std::string>());
    std::vector<TraceRow> trace = read_trace_csv(tf);
    if (trace.empty()) continue;
    if (!groups.count(label)) order.push_back(label);
    Group& g = groups[label];
    g.final_nx.push_back(static_cast<double>(trace.back().n_x));
    std::size_t att = 0;
    std::size_t acc = 0;
    for (const auto& row : trace) {
      att += row.pmmh_attempts;
      acc += row.pmmh_accepts;
    }
    if (att > 0) g.acceptance.push_back(static_cast<double>(acc) / static_cast<double>(att));
    g.blocks[r.at("seed").get<std::uint64_t>()].push_back(trace);
    g.all.push_back(std::move(trace));
  }
  json variants = json::object();
  for (const auto& label : order) {
    Group& g = groups[label];
    std::vector<double> products;
    if (replicates > 1) {
      for (const auto& [seed, tr] : g.blocks) {
        const auto table = evidence_variance_table(tr);
        if (!table.empty() && std::isfinite(table.back().product)) products.push_back(table.back().product);
      }
    } else {
      const auto table = evidence_variance_table(g.all);
      if (!table.empty() && std::isfinite(table.back().product)) products.push_back(table.back().product);
    }
    variants[label] = {{"runs", g.all.size()},
                       {"final_n_x", quantile_json(quantile_summary(g.final_nx))},
                       {"var_x_elapsed", quantile_json(quantile_summary(products))},
                       {"acceptance", quantile_json(quantile_summary(g.acceptance))}};
  }
  json summary = {{"schema", std::string(kSummarySchema)}, {"variants", variants}};
  std::ofstream out(dir / "summary.json", std::ios::binary);
  if (!out) throw InputError("cannot write summary.json in '" + dir.string() + "'");
  out << summary.dump(2) << '\n';
  return summary;
}

}  // namespace smc2
