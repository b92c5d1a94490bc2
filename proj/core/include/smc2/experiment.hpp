#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smc2/config.hpp"
#include "smc2/model.hpp"
#include "smc2/smc2.hpp"

namespace smc2 {

/// Reads one numeric column (the last field of each row). Blank lines and
/// lines starting with '#' are ignored. A non-numeric
/// first row is treated as a header and skipped; any later non-numeric row
/// is an InputError naming its 1-based row number. LogReturns100 maps
/// prices p to 100 (log p_t - log p_{t-1}).
Dataset ingest_returns(const std::filesystem::path& csv_path, Transform transform);
Dataset ingest_returns(std::istream& in, Transform transform);

std::shared_ptr<const StateSpaceModel> make_model(const DataConfig& data);
/// Parameter used for synthetic data when the config gives none.
Theta default_synthetic_theta(const StateSpaceModel& model);
/// Observations from `data.path`, or simulated from the synthetic block.
Dataset load_dataset(const DataConfig& data, const StateSpaceModel& model);

/// Single column "y" under a schema line.
void write_dataset_csv(std::ostream& os, const Dataset& data);

/// One (variant, seed, replicate) run of an experiment.
struct RunSpec {
  std::string label;  ///< "a".."d", or "c_tau<tau>" for the tau sweep
  Variant variant = Variant::C_FullPG;
  double tau = 1.0;
  std::uint64_t seed = 0;  ///< seed as listed in the config
  std::size_t replicate = 0;
  std::uint64_t run_seed = 0;  ///< seed handed to the sampler
  std::string seed_tag;        ///< "<seed>" or "<seed>r<replicate>"
};

std::vector<RunSpec> plan_runs(const RunConfig& config);

struct QuantileSummary {
  std::size_t n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
};

/// Type-7 (linear interpolation) quartiles; n == 0 gives NaNs.
QuantileSummary quantile_summary(std::vector<double> values);

/// Across-run statistics at each t present in every trace.
struct EvidenceVarianceRow {
  std::size_t t = 0;
  std::size_t runs = 0;
  double var_log_evidence = 0.0;  ///< sample variance, n - 1
  double mean_elapsed_s = 0.0;
  double product = 0.0;
};
std::vector<EvidenceVarianceRow> evidence_variance_table(const std::vector<std::vector<TraceRow>>& traces);

struct ExperimentOptions {
  std::filesystem::path out_dir;
  std::size_t workers = 1;  ///< worker pool size for independent runs
  std::ostream* log = nullptr;
};

struct ExperimentOutcome {
  std::size_t runs = 0;
  std::size_t failed = 0;
  std::filesystem::path manifest;
};

/// Runs every planned run and writes, under out_dir:
///   traces/trace_<label>_seed<tag>.csv, posterior/posterior_<label>_seed<tag>.csv,
///   fig2_nx.csv, fig3_evidence_variance.csv, fig4_acceptance.csv,
///   fig5_posterior.csv, manifest.json.
/// A run that throws is recorded as failed in the manifest; the others go on.
ExperimentOutcome run_experiment(const RunConfig& config, const ExperimentOptions& options);

/// Recomputes per-variant medians and IQRs of final N_x, final-time
/// evidence variance x mean elapsed time, and PMMH acceptance from the
/// traces listed in <dir>/manifest.json. Writes <dir>/summary.json and
/// returns the same document.
nlohmann::json summarize(const std::filesystem::path& dir);

}  // namespace smc2
