// smc2 command-line front end.
//
//   smc2 run --config cfg.json [--seeds 1,2,3] [--out dir]
//   smc2 simulate --model sv|lgssm --T 100 --theta 0,0.9,0.3 --out data.csv
//   smc2 summarize --in dir
//
// Worker count: SMC2_WORKERS (default 1). Exit codes: 0 ok, 2 config or
// input error, 3 sampler degeneracy in at least one run.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smc2/config.hpp"
#include "smc2/errors.hpp"
#include "smc2/experiment.hpp"
#include "smc2/models.hpp"

#ifndef SMC2_VERSION
#define SMC2_VERSION "0.3.0"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;

int cmd_run(const std::string& config_path, const std::vector<std::uint64_t>& seeds, const std::string& out) {
  smc2::RunConfig config = smc2::parse_config(config_path);
  for (const auto& w : config.warnings) std::cerr << "warning: " << w << '\n';
  if (!seeds.empty()) config.experiment.seeds = seeds;
  smc2::ExperimentOptions opts;
  opts.out_dir = out.empty() ? std::filesystem::path(config.experiment.output) : std::filesystem::path(out);
  opts.workers = smc2::workers_from_env(1);
  opts.log = &std::cerr;
  const smc2::ExperimentOutcome outcome = smc2::run_experiment(config, opts);
  std::cout << outcome.manifest.string() << '\n';
  if (outcome.failed > 0) {
    std::cerr << outcome.failed << " of " << outcome.runs << " runs failed; see the manifest\n";
    return kExitDegenerate;
  }
  return kExitOk;
}

int cmd_simulate(const std::string& model_name, std::size_t T, const std::vector<double>& theta, std::uint64_t seed,
                 double sigma_x, double sigma_y, const std::string& out) {
  smc2::DataConfig data;
  data.model = model_name;
  data.lgssm_sigma_x = sigma_x;
  data.lgssm_sigma_y = sigma_y;
  data.synthetic_T = T;
  data.synthetic_theta = theta;
  data.synthetic_seed = seed;
  const auto model = smc2::make_model(data);
  if (!theta.empty() && theta.size() != model->theta_dim()) {
    throw smc2::ConfigError("--theta: model '" + model_name + "' takes " + std::to_string(model->theta_dim()) +
                            " coordinates");
  }
  const smc2::Dataset ds = smc2::load_dataset(data, *model);
  if (out.empty() || out == "-") {
    smc2::write_dataset_csv(std::cout, ds);
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw smc2::InputError("cannot write '" + out + "'");
    smc2::write_dataset_csv(os, ds);
  }
  return kExitOk;
}

int cmd_summarize(const std::string& dir) {
  std::cout << smc2::summarize(dir).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SMC^2 sampler with adaptive N_x"};
  app.set_version_flag("--version", SMC2_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "comma-separated seeds (overrides experiment.seeds)")->delimiter(',');
  run->add_option("--out", out_dir, "output directory (overrides experiment.output)");

  std::string model_name = "sv";
  std::size_t T = 100;
  std::vector<double> theta;
  std::uint64_t sim_seed = 2024;
  double sigma_x = 1.0;
  double sigma_y = 0.5;
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "simulate observations from a model");
  sim->add_option("--model", model_name, "sv or lgssm")->check(CLI::IsMember({"sv", "lgssm"}));
  sim->add_option("--T", T, "final time; T+1 observations are written")->check(CLI::PositiveNumber);
  sim->add_option("--theta", theta, "comma-separated parameter")->delimiter(',');
  sim->add_option("--seed", sim_seed, "simulation seed");
  sim->add_option("--sigma-x", sigma_x, "lgssm state noise sd");
  sim->add_option("--sigma-y", sigma_y, "lgssm observation noise sd");
  sim->add_option("--out", sim_out, "output CSV ('-' for stdout)");

  std::string in_dir;
  auto* sum = app.add_subcommand("summarize", "summarise an experiment directory");
  sum->add_option("--in", in_dir, "experiment output directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, seeds, out_dir);
    if (sim->parsed()) return cmd_simulate(model_name, T, theta, sim_seed, sigma_x, sigma_y, sim_out);
    if (sum->parsed()) return cmd_summarize(in_dir);
  } catch (const smc2::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const smc2::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const smc2::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const smc2::SamplerDegeneracyError& e) {
    std::cerr << "sampler degeneracy: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
