#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sharplab/data.hpp"
#include "sharplab/diagnostics.hpp"
#include "sharplab/model.hpp"
#include "sharplab/optim.hpp"
#include "sharplab/sharpness.hpp"

namespace sharplab {

enum class Mode { vanilla, sam, msam };
enum class StartMode { msam_first, vanilla_first };
enum class DataKind { spirals, idx };

std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(StartMode mode) noexcept;
std::string_view to_string(DataKind kind) noexcept;
Mode parse_mode(std::string_view name);
StartMode parse_start_mode(std::string_view name);
DataKind parse_data_kind(std::string_view name);

struct DataSpec {
  DataKind kind = DataKind::spirals;
  std::size_t n_per_class = 500;
  std::size_t n_test_per_class = 500;
  std::size_t num_classes = 3;
  double noise = 0.15;
  std::uint64_t seed = 0;
  std::string train_images, train_labels, test_images, test_labels;
  std::optional<std::size_t> limit;
};

struct DatasetPair {
  Dataset train;
  Dataset test;
};

DatasetPair load_datasets(const DataSpec& spec);

struct SwitchSpec {
  StartMode start = StartMode::msam_first;
  double percent = 100.0;
};

struct DiagnosticsSpec {
  bool measure_lambda_max = false;
  PowerIterationOptions power;
};

/// Lists driving the multi-run experiments.
struct ExperimentSpec {
  std::vector<Mode> modes{Mode::vanilla, Mode::sam, Mode::msam};
  std::vector<std::size_t> m_values{4, 8, 16, 32, 64};
  std::vector<double> switch_percents{0, 20, 40, 60, 80, 100};
  std::vector<StartMode> start_modes{StartMode::msam_first, StartMode::vanilla_first};
  std::size_t runtime_warmup_epochs = 1;
};

struct RunConfig {
  /// input_dim / num_classes of 0 are filled from the training set; the init
  /// seed is always derived from the run seed.
  ModelSpec model{0, {{64, Activation::relu}, {64, Activation::relu}}, 0, 0};
  DataSpec data;
  LossConfig loss;
  OptimizerConfig optimizer;
  double warmup_fraction = 0.05;
  SharpnessConfig sharpness;
  Mode mode = Mode::msam;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::optional<SwitchSpec> switch_spec;
  DiagnosticsSpec diagnostics;
  ExperimentSpec experiment;

  void validate() const;
};

struct TrainRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  Mode mode_in_effect = Mode::vanilla;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::optional<double> mcc;
  double lr = 0.0;
  double epoch_wall_time_seconds = 0.0;
  std::optional<double> lambda_max;
};

struct RunResult {
  std::vector<TrainRecord> records;
  ParamVector params;
  std::optional<SharpnessReport> sharpness;
  /// Gradient evaluations and per-sample gradients spent in each epoch's
  /// optimization loop (diagnostics excluded).
  std::vector<std::uint64_t> gradient_calls_per_epoch;
  std::vector<std::uint64_t> sample_gradients_per_epoch;
  std::size_t batches_per_epoch = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Called after each epoch's optimization loop with the 1-based epoch index
/// and current parameters.
using EpochObserver = std::function<void(std::size_t epoch, const ParamVector& params)>;

/// Mode used for the 0-based epoch, honoring a switch spec if present.
Mode mode_for_epoch(const RunConfig& config, std::size_t epoch);

/// Number of leading epochs trained in the start mode of a switch run.
std::size_t switch_epochs(double percent, std::size_t epochs);

RunResult train_one(const RunConfig& config, const DatasetPair& data, std::uint64_t seed,
                    std::string run_id = {}, const EpochObserver& observer = {});

/// Binary MCC; 0 when any marginal of the confusion matrix is empty.
double matthews_corrcoef(std::span<const std::size_t> predictions,
                         std::span<const std::size_t> labels);

struct ModeSpec {
  Mode mode = Mode::vanilla;
  std::size_t m = 1;
};

struct SummaryRow {
  std::string experiment;
  std::string mode;
  std::optional<std::size_t> m;
  std::optional<double> switch_percent;
  std::size_t seed_count = 0;
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;
  double mean_epoch_seconds = 0.0;
  std::optional<double> lambda_max_mean;
  std::optional<double> lambda_max_std;
};

struct RunSharpness {
  std::string run_id;
  std::uint64_t seed = 0;
  SharpnessReport report;
};

struct ExperimentResult {
  std::vector<SummaryRow> summary;
  std::vector<TrainRecord> epochs;
  std::vector<RunSharpness> sharpness;
};

ExperimentResult run_comparison(const RunConfig& config, const DatasetPair& data,
                                std::span<const ModeSpec> modes,
                                std::string experiment = "comparison");
ExperimentResult sweep_m(const RunConfig& config, const DatasetPair& data,
                         std::span<const std::size_t> m_values);
ExperimentResult run_switch_experiment(const RunConfig& config, const DatasetPair& data,
                                       std::span<const double> switch_percents,
                                       std::span<const StartMode> start_modes);

struct RuntimeRow {
  Mode mode = Mode::vanilla;
  std::size_t m = 1;
  std::size_t measured_epochs = 0;
  double mean_epoch_seconds = 0.0;
  double std_epoch_seconds = 0.0;
  double gradient_calls_per_batch = 0.0;
  double sample_gradients_per_batch = 0.0;
  std::optional<double> ratio_to_sam;
  std::optional<double> ratio_to_vanilla;
};

/// Per-epoch wall time of each mode over all seeds, skipping the first
/// runtime_warmup_epochs epochs of every run.
std::vector<RuntimeRow> measure_runtime(const RunConfig& config, const DatasetPair& data,
                                        std::span<const ModeSpec> modes);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> xs);

// CSV output. Numbers use the shortest round-trip representation so reruns
// are byte-identical apart from timing columns.
inline constexpr std::string_view kSummaryHeader =
    "experiment,mode,m,switch_percent,seed_count,mean_test_acc,std_test_acc,"
    "mean_epoch_seconds,lambda_max_mean,lambda_max_std";
inline constexpr std::string_view kEpochHeader =
    "run_id,seed,epoch,mode_in_effect,train_loss,train_acc,test_acc,mcc,lr,epoch_seconds";
inline constexpr std::string_view kRuntimeHeader =
    "mode,m,measured_epochs,mean_epoch_seconds,std_epoch_seconds,gradient_calls_per_batch,"
    "sample_gradients_per_batch,ratio_to_sam,ratio_to_vanilla";
inline constexpr std::string_view kSharpnessHeader =
    "run_id,seed,lambda_max,iterations_used,rel_change_at_stop,converged,negative_dominant";

std::string format_number(double x);

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);
void write_epoch_csv(std::ostream& out, std::span<const TrainRecord> records);
void write_runtime_csv(std::ostream& out, std::span<const RuntimeRow> rows);
void write_sharpness_csv(std::ostream& out, std::span<const RunSharpness> rows);
/// Plot-ready m,mean_acc,std_acc rows from a sweep summary.
void write_sweep_plot_csv(std::ostream& out, std::span<const SummaryRow> rows);
/// Plot-ready start_mode,percent,mean_acc,std_acc rows from a switch summary.
void write_switch_plot_csv(std::ostream& out, std::span<const SummaryRow> rows);

}  // namespace sharplab
