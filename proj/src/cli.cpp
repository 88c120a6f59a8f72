#include "sharplab/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sharplab/config.hpp"
#include "sharplab/errors.hpp"
#include "sharplab/harness.hpp"

namespace sharplab {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::string seeds;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Options& opts) {
  cmd->add_option("--config", opts.config_path, "Config file")->required();
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--seeds", opts.seeds, "Comma-separated run seeds (overrides train.seeds)");
  cmd->add_option("--override", opts.overrides, "section.key=value, applied after the file")
      ->take_all()
      ->allow_extra_args(false);
}

// Dispatch failures split into user errors (exit 1) and everything else.
struct UsageFailure {
  std::string message;
};

RunConfig load_config(const Options& opts) {
  std::ifstream in(opts.config_path);
  if (!in) throw UsageFailure{"cannot read config file '" + opts.config_path + "'"};
  std::stringstream text;
  text << in.rdbuf();
  std::vector<std::string> overrides = opts.overrides;
  if (!opts.seeds.empty()) overrides.push_back("train.seeds=" + opts.seeds);
  try {
    return parse_config(text.str(), overrides);
  } catch (const ParseError& e) {
    throw UsageFailure{opts.config_path + ": " + e.what()};
  }
}

class OutputDir {
 public:
  OutputDir(const std::string& dir, std::ostream& announce) : dir_(dir), announce_(announce) {
    fs::create_directories(dir_);
  }

  template <typename Writer>
  void write(const std::string& name, Writer&& writer) {
    const fs::path path = dir_ / name;
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write " + path.string());
    writer(file);
    file.flush();
    if (!file) throw IoError("write failed for " + path.string());
    announce_ << path.string() << '\n';
  }

 private:
  fs::path dir_;
  std::ostream& announce_;
};

std::vector<ModeSpec> comparison_modes(const RunConfig& config) {
  std::vector<ModeSpec> modes;
  for (Mode mode : config.experiment.modes) modes.push_back({mode, config.sharpness.m});
  return modes;
}

void write_experiment(OutputDir& out, const std::string& stem, const ExperimentResult& result) {
  out.write(stem + "_summary.csv", [&](std::ostream& s) { write_summary_csv(s, result.summary); });
  out.write(stem + "_epochs.csv", [&](std::ostream& s) { write_epoch_csv(s, result.epochs); });
}

int dispatch(const std::string& command, const Options& opts, std::ostream& out,
             std::ostream& err) {
  RunConfig config = load_config(opts);
  const DatasetPair data = load_datasets(config.data);
  OutputDir dir(opts.out_dir, out);
  err << "sharplab " << command << ": " << data.train.size() << " train / " << data.test.size()
      << " test samples, " << config.seeds.size() << " seed(s)\n";

  if (command == "train") {
    const auto modes = comparison_modes(config);
    write_experiment(dir, "train", run_comparison(config, data, modes, "train"));
  } else if (command == "sweep-m") {
    const ExperimentResult result = sweep_m(config, data, config.experiment.m_values);
    write_experiment(dir, "sweep_m", result);
    dir.write("sweep_m_plot.csv", [&](std::ostream& s) { write_sweep_plot_csv(s, result.summary); });
  } else if (command == "switch") {
    const ExperimentResult result = run_switch_experiment(
        config, data, config.experiment.switch_percents, config.experiment.start_modes);
    write_experiment(dir, "switch", result);
    dir.write("switch_plot.csv", [&](std::ostream& s) { write_switch_plot_csv(s, result.summary); });
  } else if (command == "sharpness") {
    config.diagnostics.measure_lambda_max = true;
    const auto modes = comparison_modes(config);
    const ExperimentResult result = run_comparison(config, data, modes, "sharpness");
    write_experiment(dir, "sharpness", result);
    dir.write("sharpness_reports.csv",
              [&](std::ostream& s) { write_sharpness_csv(s, result.sharpness); });
  } else if (command == "runtime") {
    std::vector<ModeSpec> modes;
    for (Mode mode : config.experiment.modes) {
      if (mode != Mode::msam) {
        modes.push_back({mode, 1});
        continue;
      }
      for (std::size_t m : config.experiment.m_values) modes.push_back({Mode::msam, m});
    }
    const auto rows = measure_runtime(config, data, modes);
    dir.write("runtime.csv", [&](std::ostream& s) { write_runtime_csv(s, rows); });
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sharpness-aware training lab: SAM / mSAM experiments on desk-scale models",
               "sharplab"};
  app.require_subcommand(1);
  Options opts;
  const std::pair<const char*, const char*> commands[] = {
      {"train", "Compare modes across seeds (mean/std of final test accuracy)"},
      {"sweep-m", "mSAM accuracy as a function of the micro-batch count m"},
      {"switch", "Hybrid mSAM/vanilla training at several switch percents"},
      {"sharpness", "Train each mode and estimate the Hessian lambda_max"},
      {"runtime", "Per-epoch wall time of each mode"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opts);

  if (argc <= 1) {
    err << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return 1;
  }

  std::string command;
  for (const CLI::App* sub : app.get_subcommands()) command = sub->get_name();
  try {
    return dispatch(command, opts, out, err);
  } catch (const UsageFailure& e) {
    err << "error: " << e.message << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace sharplab
