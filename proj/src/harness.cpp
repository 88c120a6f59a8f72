#include "sharplab/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "sharplab/errors.hpp"
#include "sharplab/rng.hpp"

namespace sharplab {

namespace {

// Independent random streams hanging off a run seed.
enum Stream : std::uint64_t {
  kInitStream = 1,
  kShuffleStream = 2,
  kPartitionStream = 3,
  kPowerStream = 4,
};

}  // namespace

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::vanilla: return "vanilla";
    case Mode::sam: return "sam";
    case Mode::msam: return "msam";
  }
  return "?";
}

std::string_view to_string(StartMode mode) noexcept {
  return mode == StartMode::msam_first ? "msam_first" : "vanilla_first";
}

std::string_view to_string(DataKind kind) noexcept {
  return kind == DataKind::idx ? "idx" : "spirals";
}

Mode parse_mode(std::string_view name) {
  if (name == "vanilla") return Mode::vanilla;
  if (name == "sam") return Mode::sam;
  if (name == "msam") return Mode::msam;
  throw DomainError("unknown mode '" + std::string(name) + "'");
}

StartMode parse_start_mode(std::string_view name) {
  if (name == "msam_first") return StartMode::msam_first;
  if (name == "vanilla_first") return StartMode::vanilla_first;
  throw DomainError("unknown start mode '" + std::string(name) + "'");
}

DataKind parse_data_kind(std::string_view name) {
  if (name == "spirals") return DataKind::spirals;
  if (name == "idx") return DataKind::idx;
  throw DomainError("unknown data kind '" + std::string(name) + "'");
}

DatasetPair load_datasets(const DataSpec& spec) {
  DatasetPair pair;
  if (spec.kind == DataKind::spirals) {
    pair.train = gen_spirals(spec.n_per_class, spec.num_classes, spec.noise, spec.seed, Split::train);
    pair.test = gen_spirals(spec.n_test_per_class, spec.num_classes, spec.noise, spec.seed, Split::test);
    return pair;
  }
  if (spec.train_images.empty() || spec.train_labels.empty() || spec.test_images.empty() ||
      spec.test_labels.empty()) {
    throw DomainError("data: idx requires train/test image and label paths");
  }
  pair.train = load_idx_images(spec.train_images, spec.train_labels, spec.limit);
  pair.test = load_idx_images(spec.test_images, spec.test_labels, spec.limit);
  pair.train.split = Split::train;
  pair.test.split = Split::test;
  const std::size_t classes = std::max(pair.train.num_classes, pair.test.num_classes);
  pair.train.num_classes = pair.test.num_classes = classes;
  return pair;
}

void RunConfig::validate() const {
  for (const Layer& layer : model.hidden_layers) {
    if (layer.width == 0) throw DomainError("model: hidden widths must be positive");
  }
  loss.validate();
  optimizer.validate();
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw DomainError("schedule: warmup_fraction must be in [0, 1)");
  }
  if (batch_size == 0) throw DomainError("train: batch_size must be positive");
  const bool uses_msam = mode == Mode::msam || switch_spec.has_value();
  if (mode != Mode::vanilla || switch_spec) sharpness.validate();
  if (uses_msam && sharpness.m > batch_size) {
    throw DomainError("sharpness: m exceeds batch size");
  }
  if (switch_spec && !(switch_spec->percent >= 0.0 && switch_spec->percent <= 100.0)) {
    throw DomainError("switch: percent must be in [0, 100]");
  }
  if (diagnostics.measure_lambda_max) {
    if (!(diagnostics.power.tol > 0.0)) throw DomainError("diagnostics: tol must be positive");
    if (diagnostics.power.max_iters == 0) throw DomainError("diagnostics: max_iters must be positive");
  }
}

std::size_t switch_epochs(double percent, std::size_t epochs) {
  if (!(percent >= 0.0 && percent <= 100.0)) throw DomainError("switch: percent out of range");
  return static_cast<std::size_t>(std::ceil(percent * static_cast<double>(epochs) / 100.0));
}

Mode mode_for_epoch(const RunConfig& config, std::size_t epoch) {
  if (!config.switch_spec) return config.mode;
  const bool in_first = epoch < switch_epochs(config.switch_spec->percent, config.epochs);
  const bool msam_first = config.switch_spec->start == StartMode::msam_first;
  return in_first == msam_first ? Mode::msam : Mode::vanilla;
}

double matthews_corrcoef(std::span<const std::size_t> predictions,
                         std::span<const std::size_t> labels) {
  if (predictions.empty()) throw DomainError("mcc: empty input");
  if (predictions.size() != labels.size()) throw DomainError("mcc: length mismatch");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] > 1 || labels[i] > 1) throw DomainError("mcc: labels must be binary");
    const bool pred = predictions[i] == 1;
    const bool truth = labels[i] == 1;
    if (pred && truth) ++tp;
    else if (!pred && !truth) ++tn;
    else if (pred) ++fp;
    else ++fn;
  }
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return std::clamp((tp * tn - fp * fn) / std::sqrt(denom), -1.0, 1.0);
}

RunResult train_one(const RunConfig& config, const DatasetPair& data, std::uint64_t seed,
                    std::string run_id, const EpochObserver& observer) {
  config.validate();
  if (data.train.samples.empty()) throw DomainError("train: empty training set");
  if (data.test.samples.empty()) throw DomainError("train: empty test set");

  ModelSpec spec = config.model;
  if (spec.input_dim == 0) spec.input_dim = data.train.feature_dim();
  if (spec.num_classes == 0) spec.num_classes = data.train.num_classes;
  spec.init_seed = derive_seed(seed, kInitStream);
  const Mlp model(spec, config.loss);
  const CountingObjective counted(model);

  RunResult result;
  result.params = init_params(spec);
  ParamVector& w = result.params;
  const Batch train_view = data.train.view();
  const Batch test_view = data.test.view();
  const std::size_t n = data.train.size();
  result.batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  if (config.epochs == 0) return result;

  const LrSchedule schedule{config.optimizer.lr, config.epochs * result.batches_per_epoch,
                            config.warmup_fraction};
  Optimizer optimizer(config.optimizer, w.size());
  const std::uint64_t shuffle_base = derive_seed(seed, kShuffleStream);
  const std::uint64_t partition_base = derive_seed(seed, kPartitionStream);
  const double rho = config.sharpness.rho;
  const bool binary = spec.num_classes == 2;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const Mode mode = mode_for_epoch(config, epoch);
    const std::vector<Batch> batches =
        epoch_batches(data.train, config.batch_size, derive_seed(shuffle_base, epoch));
    const std::uint64_t calls_before = counted.gradient_calls();
    const std::uint64_t samples_before = counted.sample_gradients();

    double lr = 0.0;
    bool finite = true;
    const auto start = std::chrono::steady_clock::now();
    for (const Batch& batch : batches) {
      lr = schedule.lr_at(step);
      ParamVector g;
      switch (mode) {
        case Mode::vanilla:
          g = counted.grad(w, batch);
          break;
        case Mode::sam:
          g = sam_gradient(counted, w, batch, rho);
          break;
        case Mode::msam: {
          // A short trailing batch may hold fewer samples than m.
          const std::size_t m = std::min(config.sharpness.m, batch.size());
          const MicroBatchPartition partition =
              partition_minibatch(batch.size(), m, derive_seed(partition_base, step));
          g = msam_gradient(counted, w, batch, partition, rho);
          break;
        }
      }
      optimizer.apply_update(w, g, lr);
      ++step;
      if (!w.all_finite()) {
        finite = false;
        break;
      }
    }
    const auto stop = std::chrono::steady_clock::now();
    result.gradient_calls_per_epoch.push_back(counted.gradient_calls() - calls_before);
    result.sample_gradients_per_epoch.push_back(counted.sample_gradients() - samples_before);
    if (observer) observer(epoch + 1, w);

    TrainRecord rec;
    rec.run_id = run_id;
    rec.seed = seed;
    rec.epoch = epoch + 1;
    rec.mode_in_effect = mode;
    rec.lr = lr;
    rec.epoch_wall_time_seconds = std::chrono::duration<double>(stop - start).count();
    rec.train_loss = finite ? model.loss(w, train_view) : std::nan("");
    rec.train_accuracy = finite ? model.accuracy(w, train_view) : 0.0;
    rec.test_accuracy = finite ? model.accuracy(w, test_view) : 0.0;
    if (finite && binary) {
      std::vector<std::size_t> predictions, labels;
      for (const Sample* s : test_view) {
        predictions.push_back(model.predict(w, *s));
        labels.push_back(s->label);
      }
      rec.mcc = matthews_corrcoef(predictions, labels);
    }
    if (!std::isfinite(rec.train_loss)) {
      result.aborted = true;
      result.abort_reason = "non-finite training loss at epoch " + std::to_string(epoch + 1);
      result.records.push_back(std::move(rec));
      return result;
    }
    result.records.push_back(std::move(rec));
  }

  if (config.diagnostics.measure_lambda_max) {
    PowerIterationOptions opts = config.diagnostics.power;
    opts.seed = derive_seed(derive_seed(seed, kPowerStream), config.diagnostics.power.seed);
    result.sharpness = lambda_max(model, w, train_view, opts);
    result.records.back().lambda_max = result.sharpness->lambda_max;
  }
  return result;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

namespace {

struct Variant {
  std::string label;
  std::optional<std::size_t> m;
  std::optional<double> percent;
  RunConfig config;
};

std::string run_id_for(const std::string& experiment, const Variant& v, std::uint64_t seed) {
  std::string id = experiment + "/" + v.label;
  if (v.m) id += "/m" + std::to_string(*v.m);
  if (v.percent) id += "/p" + format_number(*v.percent);
  return id + "/seed" + std::to_string(seed);
}

void run_variant(const std::string& experiment, const Variant& v, const DatasetPair& data,
                 ExperimentResult& out) {
  const RunConfig& config = v.config;
  if (config.seeds.empty()) throw DomainError("experiment: at least one seed required");

  std::vector<double> finals, lambdas, epoch_times;
  for (std::uint64_t seed : config.seeds) {
    const std::string run_id = run_id_for(experiment, v, seed);
    RunResult run = train_one(config, data, seed, run_id);
    if (!run.records.empty()) finals.push_back(run.records.back().test_accuracy);
    if (run.sharpness) {
      lambdas.push_back(run.sharpness->lambda_max);
      out.sharpness.push_back({run_id, seed, *run.sharpness});
    }
    for (const TrainRecord& r : run.records) epoch_times.push_back(r.epoch_wall_time_seconds);
    out.epochs.insert(out.epochs.end(), run.records.begin(), run.records.end());
  }

  SummaryRow row;
  row.experiment = experiment;
  row.mode = v.label;
  row.m = v.m;
  row.switch_percent = v.percent;
  row.seed_count = config.seeds.size();
  row.mean_test_acc = mean(finals);
  row.std_test_acc = sample_std(finals);
  row.mean_epoch_seconds = mean(epoch_times);
  if (!lambdas.empty()) {
    row.lambda_max_mean = mean(lambdas);
    row.lambda_max_std = sample_std(lambdas);
  }
  out.summary.push_back(std::move(row));
}

Variant mode_variant(const RunConfig& base, const ModeSpec& spec) {
  Variant v{std::string(to_string(spec.mode)), std::nullopt, std::nullopt, base};
  v.config.mode = spec.mode;
  v.config.switch_spec.reset();
  if (spec.mode == Mode::sam) {
    v.m = 1;
    v.config.sharpness.m = 1;
  } else if (spec.mode == Mode::msam) {
    v.m = spec.m;
    v.config.sharpness.m = spec.m;
  }
  return v;
}

}  // namespace

ExperimentResult run_comparison(const RunConfig& config, const DatasetPair& data,
                                std::span<const ModeSpec> modes, std::string experiment) {
  ExperimentResult out;
  for (const ModeSpec& spec : modes) run_variant(experiment, mode_variant(config, spec), data, out);
  return out;
}

ExperimentResult sweep_m(const RunConfig& config, const DatasetPair& data,
                         std::span<const std::size_t> m_values) {
  for (std::size_t m : m_values) {
    if (m == 0) throw DomainError("sweep_m: m must be at least 1");
    if (m > config.batch_size) throw DomainError("sweep_m: m exceeds batch size");
  }
  std::vector<ModeSpec> modes;
  for (std::size_t m : m_values) modes.push_back({Mode::msam, m});
  return run_comparison(config, data, modes, "sweep_m");
}

ExperimentResult run_switch_experiment(const RunConfig& config, const DatasetPair& data,
                                       std::span<const double> switch_percents,
                                       std::span<const StartMode> start_modes) {
  ExperimentResult out;
  for (StartMode start : start_modes) {
    for (double percent : switch_percents) {
      if (!(percent >= 0.0 && percent <= 100.0)) {
        throw DomainError("switch: percent must be in [0, 100]");
      }
      Variant v{std::string(to_string(start)), config.sharpness.m, percent, config};
      v.config.switch_spec = SwitchSpec{start, percent};
      run_variant("switch", v, data, out);
    }
  }
  return out;
}

std::vector<RuntimeRow> measure_runtime(const RunConfig& config, const DatasetPair& data,
                                        std::span<const ModeSpec> modes) {
  const std::size_t warmup = config.experiment.runtime_warmup_epochs;
  if (config.epochs < warmup + 3) {
    throw DomainError("runtime: need at least 3 measured epochs after warmup");
  }
  if (config.seeds.empty()) throw DomainError("runtime: at least one seed required");

  std::vector<RuntimeRow> rows;
  for (const ModeSpec& spec : modes) {
    RunConfig run_config = mode_variant(config, spec).config;
    run_config.diagnostics.measure_lambda_max = false;

    std::vector<double> times;
    std::uint64_t calls = 0, sample_grads = 0, batches = 0;
    for (std::uint64_t seed : config.seeds) {
      const RunResult run = train_one(run_config, data, seed);
      for (std::size_t e = warmup; e < run.records.size(); ++e) {
        times.push_back(run.records[e].epoch_wall_time_seconds);
        calls += run.gradient_calls_per_epoch[e];
        sample_grads += run.sample_gradients_per_epoch[e];
        batches += run.batches_per_epoch;
      }
    }
    RuntimeRow row;
    row.mode = spec.mode;
    row.m = spec.mode == Mode::msam ? spec.m : 1;
    row.measured_epochs = times.size();
    row.mean_epoch_seconds = mean(times);
    row.std_epoch_seconds = sample_std(times);
    row.gradient_calls_per_batch = batches ? static_cast<double>(calls) / static_cast<double>(batches) : 0.0;
    row.sample_gradients_per_batch =
        batches ? static_cast<double>(sample_grads) / static_cast<double>(batches) : 0.0;
    rows.push_back(row);
  }

  const RuntimeRow* sam = nullptr;
  const RuntimeRow* vanilla = nullptr;
  for (const RuntimeRow& r : rows) {
    if (r.mode == Mode::sam && !sam) sam = &r;
    if (r.mode == Mode::vanilla && !vanilla) vanilla = &r;
  }
  for (RuntimeRow& r : rows) {
    if (r.mode == Mode::msam && sam) r.ratio_to_sam = r.mean_epoch_seconds / sam->mean_epoch_seconds;
    if (r.mode == Mode::sam && vanilla) {
      r.ratio_to_vanilla = r.mean_epoch_seconds / vanilla->mean_epoch_seconds;
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

template <typename T>
std::string optional_field(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return format_number(*v);
  } else {
    return std::to_string(*v);
  }
}

}  // namespace

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << kSummaryHeader << '\n';
  for (const SummaryRow& r : rows) {
    out << r.experiment << ',' << r.mode << ',' << optional_field(r.m) << ','
        << optional_field(r.switch_percent) << ',' << r.seed_count << ','
        << format_number(r.mean_test_acc) << ',' << format_number(r.std_test_acc) << ','
        << format_number(r.mean_epoch_seconds) << ',' << optional_field(r.lambda_max_mean) << ','
        << optional_field(r.lambda_max_std) << '\n';
  }
}

void write_epoch_csv(std::ostream& out, std::span<const TrainRecord> records) {
  out << kEpochHeader << '\n';
  for (const TrainRecord& r : records) {
    out << r.run_id << ',' << r.seed << ',' << r.epoch << ',' << to_string(r.mode_in_effect) << ','
        << format_number(r.train_loss) << ',' << format_number(r.train_accuracy) << ','
        << format_number(r.test_accuracy) << ',' << optional_field(r.mcc) << ','
        << format_number(r.lr) << ',' << format_number(r.epoch_wall_time_seconds) << '\n';
  }
}

void write_runtime_csv(std::ostream& out, std::span<const RuntimeRow> rows) {
  out << kRuntimeHeader << '\n';
  for (const RuntimeRow& r : rows) {
    out << to_string(r.mode) << ',' << r.m << ',' << r.measured_epochs << ','
        << format_number(r.mean_epoch_seconds) << ',' << format_number(r.std_epoch_seconds) << ','
        << format_number(r.gradient_calls_per_batch) << ','
        << format_number(r.sample_gradients_per_batch) << ',' << optional_field(r.ratio_to_sam)
        << ',' << optional_field(r.ratio_to_vanilla) << '\n';
  }
}

void write_sharpness_csv(std::ostream& out, std::span<const RunSharpness> rows) {
  out << kSharpnessHeader << '\n';
  for (const RunSharpness& r : rows) {
    out << r.run_id << ',' << r.seed << ',' << format_number(r.report.lambda_max) << ','
        << r.report.iterations_used << ',' << format_number(r.report.rel_change_at_stop) << ','
        << (r.report.converged ? "true" : "false") << ','
        << (r.report.negative_dominant ? "true" : "false") << '\n';
  }
}

void write_sweep_plot_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "m,mean_acc,std_acc\n";
  for (const SummaryRow& r : rows) {
    out << optional_field(r.m) << ',' << format_number(r.mean_test_acc) << ','
        << format_number(r.std_test_acc) << '\n';
  }
}

void write_switch_plot_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "start_mode,percent,mean_acc,std_acc\n";
  for (const SummaryRow& r : rows) {
    out << r.mode << ',' << optional_field(r.switch_percent) << ','
        << format_number(r.mean_test_acc) << ',' << format_number(r.std_test_acc) << '\n';
  }
}

}  // namespace sharplab
