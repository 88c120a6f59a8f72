#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sharplab/config.hpp"
#include "sharplab/errors.hpp"
#include "sharplab/harness.hpp"

using namespace sharplab;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  c.model.hidden_layers = {{8, Activation::relu}};
  c.data.n_per_class = 20;
  c.data.n_test_per_class = 20;
  c.data.num_classes = 3;
  c.optimizer.lr = 0.2;
  c.optimizer.weight_decay = 5e-4;
  c.loss.label_smoothing = 0.1;
  c.sharpness.rho = 0.05;
  c.sharpness.m = 4;
  c.epochs = 4;
  c.batch_size = 16;
  c.seeds = {1, 2};
  return c;
}

const DatasetPair& tiny_data() {
  static const DatasetPair data = load_datasets(tiny_config().data);
  return data;
}

// Per-epoch CSV with the timing column blanked.
std::string stripped_epoch_csv(const std::vector<TrainRecord>& records) {
  std::vector<TrainRecord> copy = records;
  for (TrainRecord& r : copy) r.epoch_wall_time_seconds = 0.0;
  std::ostringstream out;
  write_epoch_csv(out, copy);
  return out.str();
}

}  // namespace

TEST_CASE("mcc on canonical confusion matrices") {
  const std::vector<std::size_t> labels{1, 0, 1, 0};
  CHECK(matthews_corrcoef(labels, labels) == doctest::Approx(1.0));
  const std::vector<std::size_t> inverted{0, 1, 0, 1};
  CHECK(matthews_corrcoef(inverted, labels) == doctest::Approx(-1.0));
  // TP = TN = FP = FN = 1
  const std::vector<std::size_t> pred{1, 0, 1, 0};
  const std::vector<std::size_t> truth{1, 0, 0, 1};
  CHECK(matthews_corrcoef(pred, truth) == 0.0);
  // degenerate marginal
  const std::vector<std::size_t> all_one{1, 1, 1, 1};
  CHECK(matthews_corrcoef(all_one, truth) == 0.0);
  CHECK_THROWS_AS(matthews_corrcoef(std::vector<std::size_t>{}, std::vector<std::size_t>{}), DomainError);
  CHECK_THROWS_AS(matthews_corrcoef(pred, std::vector<std::size_t>{1}), DomainError);
  CHECK_THROWS_AS(matthews_corrcoef(std::vector<std::size_t>{2}, std::vector<std::size_t>{1}), DomainError);
}

TEST_CASE("mcc against a worked example") {
  // TP=3 TN=2 FP=1 FN=2: (6 - 2) / sqrt(4 * 5 * 3 * 4)
  const std::vector<std::size_t> pred{1, 1, 1, 0, 0, 1, 0, 0};
  const std::vector<std::size_t> truth{1, 1, 1, 0, 0, 0, 1, 1};
  CHECK(matthews_corrcoef(pred, truth) == doctest::Approx(4.0 / std::sqrt(240.0)).epsilon(1e-15));
}

TEST_CASE("sample statistics") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(xs) == 2.5);
  CHECK(sample_std(xs) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(sample_std(std::vector<double>{3.0}) == 0.0);
}

TEST_CASE("switch epoch arithmetic") {
  CHECK(switch_epochs(20, 10) == 2);
  CHECK(switch_epochs(0, 10) == 0);
  CHECK(switch_epochs(100, 10) == 10);
  CHECK(switch_epochs(25, 10) == 3);
  CHECK_THROWS_AS(switch_epochs(101, 10), DomainError);

  RunConfig c = tiny_config();
  c.epochs = 10;
  c.switch_spec = SwitchSpec{StartMode::msam_first, 20};
  for (std::size_t e = 0; e < 10; ++e) CHECK(mode_for_epoch(c, e) == (e < 2 ? Mode::msam : Mode::vanilla));
  c.switch_spec = SwitchSpec{StartMode::vanilla_first, 20};
  for (std::size_t e = 0; e < 10; ++e) CHECK(mode_for_epoch(c, e) == (e < 2 ? Mode::vanilla : Mode::msam));
}

TEST_CASE("zero epochs yields no records and initial parameters") {
  RunConfig c = tiny_config();
  c.epochs = 0;
  const RunResult r = train_one(c, tiny_data(), 3);
  CHECK(r.records.empty());
  ModelSpec spec = c.model;
  spec.input_dim = 2;
  spec.num_classes = 3;
  const RunResult again = train_one(c, tiny_data(), 3);
  CHECK(bitwise_equal(r.params, again.params));
  for (std::size_t i = 0; i < r.params.size(); ++i) {
    if (r.params[i] != 0.0) return;
  }
  FAIL("initial parameters are all zero");
}

TEST_CASE("records are well formed and reproducible") {
  RunConfig c = tiny_config();
  c.mode = Mode::msam;
  const RunResult a = train_one(c, tiny_data(), 11, "run");
  const RunResult b = train_one(c, tiny_data(), 11, "run");
  REQUIRE(a.records.size() == 4);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const TrainRecord& r = a.records[i];
    CHECK(r.epoch == i + 1);
    CHECK(r.run_id == "run");
    CHECK(r.mode_in_effect == Mode::msam);
    CHECK(r.train_accuracy >= 0.0);
    CHECK(r.train_accuracy <= 1.0);
    CHECK(r.test_accuracy >= 0.0);
    CHECK(r.test_accuracy <= 1.0);
    CHECK(r.lr > 0.0);
    CHECK(r.epoch_wall_time_seconds >= 0.0);
    CHECK_FALSE(r.mcc.has_value());
  }
  CHECK(stripped_epoch_csv(a.records) == stripped_epoch_csv(b.records));
  CHECK(bitwise_equal(a.params, b.params));
  const RunResult other = train_one(c, tiny_data(), 12, "run");
  CHECK_FALSE(bitwise_equal(a.params, other.params));
}

TEST_CASE("sam and msam with m = 1 train identically") {
  RunConfig c = tiny_config();
  c.mode = Mode::sam;
  const RunResult sam = train_one(c, tiny_data(), 5);
  c.mode = Mode::msam;
  c.sharpness.m = 1;
  const RunResult msam = train_one(c, tiny_data(), 5);
  CHECK(bitwise_equal(sam.params, msam.params));
  for (std::size_t i = 0; i < sam.records.size(); ++i) {
    CHECK(sam.records[i].test_accuracy == msam.records[i].test_accuracy);
    CHECK(sam.records[i].train_loss == msam.records[i].train_loss);
  }
}

TEST_CASE("gradient evaluation accounting per mode") {
  RunConfig c = tiny_config();  // 60 samples, batch 16 -> 4 batches (last has 12)
  for (auto [mode, per_batch] : {std::pair{Mode::vanilla, 1}, {Mode::sam, 2}, {Mode::msam, 8}}) {
    c.mode = mode;
    const RunResult r = train_one(c, tiny_data(), 1);
    REQUIRE(r.batches_per_epoch == 4);
    for (std::size_t e = 0; e < r.gradient_calls_per_epoch.size(); ++e) {
      CHECK(r.gradient_calls_per_epoch[e] == static_cast<std::uint64_t>(per_batch) * 4);
      const std::uint64_t passes = mode == Mode::vanilla ? 1 : 2;
      CHECK(r.sample_gradients_per_epoch[e] == passes * 60);
    }
  }
}

TEST_CASE("binary datasets report mcc") {
  RunConfig c = tiny_config();
  c.data.num_classes = 2;
  const DatasetPair data = load_datasets(c.data);
  const RunResult r = train_one(c, data, 1);
  for (const TrainRecord& rec : r.records) {
    REQUIRE(rec.mcc.has_value());
    CHECK(*rec.mcc >= -1.0);
    CHECK(*rec.mcc <= 1.0);
  }
}

TEST_CASE("divergent training aborts with a diagnostic record") {
  RunConfig c = tiny_config();
  c.mode = Mode::vanilla;
  c.optimizer.lr = 1e200;
  c.warmup_fraction = 0.0;
  const RunResult r = train_one(c, tiny_data(), 1);
  CHECK(r.aborted);
  CHECK_FALSE(r.abort_reason.empty());
  REQUIRE(r.records.size() == 1);
  CHECK(std::isnan(r.records.back().train_loss));
}

TEST_CASE("lambda_max is attached to the final record") {
  RunConfig c = tiny_config();
  c.diagnostics.measure_lambda_max = true;
  const RunResult r = train_one(c, tiny_data(), 2);
  REQUIRE(r.sharpness.has_value());
  REQUIRE(r.records.back().lambda_max.has_value());
  CHECK(*r.records.back().lambda_max == r.sharpness->lambda_max);
  for (std::size_t i = 0; i + 1 < r.records.size(); ++i) CHECK_FALSE(r.records[i].lambda_max);
}

TEST_CASE("switch runs continue from the first phase bit-exactly") {
  RunConfig c = tiny_config();
  c.epochs = 5;
  c.switch_spec = SwitchSpec{StartMode::msam_first, 40};  // 2 epochs mSAM
  ParamVector at_switch;
  train_one(c, tiny_data(), 9, {}, [&](std::size_t epoch, const ParamVector& w) {
    if (epoch == 2) at_switch = w;
  });

  RunConfig pure = c;
  pure.switch_spec.reset();
  pure.mode = Mode::msam;
  ParamVector truncated;
  train_one(pure, tiny_data(), 9, {}, [&](std::size_t epoch, const ParamVector& w) {
    if (epoch == 2) truncated = w;
  });
  CHECK(bitwise_equal(at_switch, truncated));
}

TEST_CASE("switch boundaries reproduce pure runs") {
  RunConfig c = tiny_config();
  RunConfig pure = c;
  pure.mode = Mode::msam;
  const ParamVector msam = train_one(pure, tiny_data(), 4).params;
  pure.mode = Mode::vanilla;
  const ParamVector vanilla = train_one(pure, tiny_data(), 4).params;

  c.switch_spec = SwitchSpec{StartMode::msam_first, 100};
  CHECK(bitwise_equal(train_one(c, tiny_data(), 4).params, msam));
  c.switch_spec = SwitchSpec{StartMode::msam_first, 0};
  CHECK(bitwise_equal(train_one(c, tiny_data(), 4).params, vanilla));
  c.switch_spec = SwitchSpec{StartMode::vanilla_first, 100};
  CHECK(bitwise_equal(train_one(c, tiny_data(), 4).params, vanilla));
}

TEST_CASE("comparison summary shape and aggregation") {
  RunConfig c = tiny_config();
  c.seeds = {1, 2, 3};
  const std::vector<ModeSpec> modes{{Mode::vanilla, 1}, {Mode::sam, 1}, {Mode::msam, 4}, {Mode::sam, 1}};
  const ExperimentResult res = run_comparison(c, tiny_data(), modes);
  REQUIRE(res.summary.size() == 4);
  CHECK(res.epochs.size() == 4 * 3 * c.epochs);
  CHECK(res.summary[0].mode == "vanilla");
  CHECK_FALSE(res.summary[0].m.has_value());
  CHECK(*res.summary[1].m == 1);
  CHECK(*res.summary[2].m == 4);
  CHECK(res.summary[1].mean_test_acc == res.summary[3].mean_test_acc);
  CHECK(res.summary[1].std_test_acc == res.summary[3].std_test_acc);

  // mean of per-seed finals
  for (std::size_t row = 0; row < 4; ++row) {
    double sum = 0.0;
    for (std::size_t s = 0; s < 3; ++s) sum += res.epochs[(row * 3 + s) * c.epochs + c.epochs - 1].test_accuracy;
    CHECK(std::abs(res.summary[row].mean_test_acc - sum / 3.0) < 1e-12);
    CHECK(res.summary[row].seed_count == 3);
  }

  c.seeds = {1};
  const ExperimentResult single = run_comparison(c, tiny_data(), std::vector<ModeSpec>{{Mode::msam, 2}});
  CHECK(single.summary[0].std_test_acc == 0.0);
}

TEST_CASE("sweep over m") {
  RunConfig c = tiny_config();
  c.seeds = {1};
  const std::vector<std::size_t> ms{1, 4, 4};
  const ExperimentResult res = sweep_m(c, tiny_data(), ms);
  REQUIRE(res.summary.size() == 3);
  CHECK(res.summary[1].mean_test_acc == res.summary[2].mean_test_acc);

  const ExperimentResult sam = run_comparison(c, tiny_data(), std::vector<ModeSpec>{{Mode::sam, 1}});
  CHECK(res.summary[0].mean_test_acc == sam.summary[0].mean_test_acc);
  CHECK_THROWS_AS(sweep_m(c, tiny_data(), std::vector<std::size_t>{17}), DomainError);

  std::ostringstream plot;
  write_sweep_plot_csv(plot, res.summary);
  CHECK(plot.str().starts_with("m,mean_acc,std_acc\n1,"));
}

TEST_CASE("switch experiment rows") {
  RunConfig c = tiny_config();
  c.seeds = {1};
  const std::vector<double> percents{0, 50, 100};
  const std::vector<StartMode> starts{StartMode::msam_first, StartMode::vanilla_first};
  const ExperimentResult res = run_switch_experiment(c, tiny_data(), percents, starts);
  REQUIRE(res.summary.size() == 6);
  CHECK(res.summary[0].mode == "msam_first");
  CHECK(*res.summary[1].switch_percent == 50.0);
  // msam_first @0 == vanilla_first @100 (both pure vanilla)
  CHECK(res.summary[0].mean_test_acc == res.summary[5].mean_test_acc);
  CHECK(res.summary[2].mean_test_acc == res.summary[3].mean_test_acc);
  // per-epoch mode sequence for msam_first @50 over 4 epochs: 2 msam then vanilla
  const std::size_t base = 1 * c.epochs;
  CHECK(res.epochs[base + 1].mode_in_effect == Mode::msam);
  CHECK(res.epochs[base + 2].mode_in_effect == Mode::vanilla);
  CHECK_THROWS_AS(run_switch_experiment(c, tiny_data(), std::vector<double>{120}, starts), DomainError);
}

TEST_CASE("runtime measurement accounting") {
  RunConfig c = tiny_config();
  c.seeds = {1};
  const std::vector<ModeSpec> modes{{Mode::vanilla, 1}, {Mode::sam, 1}, {Mode::msam, 4}};
  const auto rows = measure_runtime(c, tiny_data(), modes);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].gradient_calls_per_batch == 1.0);
  CHECK(rows[1].gradient_calls_per_batch == 2.0);
  CHECK(rows[2].gradient_calls_per_batch == 8.0);
  CHECK(rows[1].sample_gradients_per_batch == rows[2].sample_gradients_per_batch);
  CHECK(rows[0].measured_epochs == 3);
  CHECK(rows[1].ratio_to_vanilla.has_value());
  CHECK(rows[2].ratio_to_sam.has_value());
  CHECK_FALSE(rows[0].ratio_to_sam.has_value());

  c.epochs = 3;
  CHECK_THROWS_AS(measure_runtime(c, tiny_data(), modes), DomainError);
}

TEST_CASE("csv schemas") {
  SummaryRow row;
  row.experiment = "comparison";
  row.mode = "msam";
  row.m = 8;
  row.seed_count = 5;
  row.mean_test_acc = 0.5;
  row.std_test_acc = 0.25;
  row.mean_epoch_seconds = 0.125;
  std::ostringstream out;
  write_summary_csv(out, std::vector<SummaryRow>{row});
  CHECK(out.str() ==
        "experiment,mode,m,switch_percent,seed_count,mean_test_acc,std_test_acc,"
        "mean_epoch_seconds,lambda_max_mean,lambda_max_std\n"
        "comparison,msam,8,,5,0.5,0.25,0.125,,\n");

  TrainRecord rec;
  rec.run_id = "r";
  rec.seed = 3;
  rec.epoch = 1;
  rec.mode_in_effect = Mode::sam;
  rec.train_loss = 0.1;
  rec.train_accuracy = 1;
  rec.test_accuracy = 0.75;
  rec.lr = 0.02;
  rec.epoch_wall_time_seconds = 2;
  std::ostringstream epochs;
  write_epoch_csv(epochs, std::vector<TrainRecord>{rec});
  CHECK(epochs.str() ==
        "run_id,seed,epoch,mode_in_effect,train_loss,train_acc,test_acc,mcc,lr,epoch_seconds\n"
        "r,3,1,sam,0.1,1,0.75,,0.02,2\n");
}

TEST_CASE("run config validation") {
  RunConfig c = tiny_config();
  c.mode = Mode::msam;
  c.sharpness.m = 17;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.sharpness.m = 4;
  c.sharpness.rho = 0.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.mode = Mode::vanilla;
  CHECK_NOTHROW(c.validate());
  c.switch_spec = SwitchSpec{StartMode::msam_first, 50};
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("vanilla training separates noise-free spirals") {
  RunConfig c = preset_config("desk");
  c.data.num_classes = 2;
  c.data.noise = 0.0;
  c.mode = Mode::vanilla;
  c.seeds = {1};
  const RunResult r = train_one(c, load_datasets(c.data), 1);
  REQUIRE(r.records.size() == 200);
  CHECK(r.records.back().train_accuracy == 1.0);
}
