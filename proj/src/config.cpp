#include "sharplab/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>

#include "sharplab/errors.hpp"

namespace sharplab {

RunConfig preset_config(std::string_view name) {
  RunConfig c;
  c.loss.label_smoothing = 0.1;
  c.optimizer.kind = OptimizerKind::sgd_momentum;
  c.optimizer.momentum = 0.9;
  c.optimizer.weight_decay = 5e-4;
  c.warmup_fraction = 0.05;

  if (name == "desk") {
    c.loss.label_smoothing = 0.0;
    c.optimizer.lr = 0.1;
    c.optimizer.weight_decay = 0.0;
    c.sharpness.rho = 0.02;
    c.sharpness.m = 8;
    c.epochs = 200;
    c.batch_size = 64;
  } else if (name == "cnn_cifar" || name == "wrn_cifar") {
    c.optimizer.lr = name == "cnn_cifar" ? 0.5 : 0.75;
    c.sharpness.rho = 0.2;
    c.sharpness.m = 32;
    c.epochs = 200;
    c.batch_size = 512;
  } else if (name == "vit") {
    c.loss.label_smoothing = 0.0;
    c.optimizer.kind = OptimizerKind::adamw;
    c.optimizer.lr = 1e-3;
    c.optimizer.weight_decay = 0.3;
    c.optimizer.grad_clip_norm = 1.0;
    c.sharpness.rho = 0.3;
    c.sharpness.m = 32;
    c.epochs = 20;
    c.batch_size = 512;
  } else if (name.starts_with("glue_")) {
    struct Glue {
      std::string_view name;
      double lr;
      std::size_t epochs;
      double rho;
    };
    static constexpr Glue tasks[] = {{"glue_cola", 1e-5, 60, 0.01},
                                     {"glue_mrpc", 1e-5, 60, 0.01},
                                     {"glue_sst2", 5e-6, 20, 0.05},
                                     {"glue_qqp", 2e-5, 15, 0.05}};
    const auto* task = std::find_if(std::begin(tasks), std::end(tasks),
                                    [&](const Glue& g) { return g.name == name; });
    if (task == std::end(tasks)) throw DomainError("unknown preset '" + std::string(name) + "'");
    c.loss.label_smoothing = 0.0;
    c.optimizer.kind = OptimizerKind::adamw;
    c.optimizer.lr = task->lr;
    c.optimizer.weight_decay = 0.01;
    c.warmup_fraction = 0.06;
    c.epochs = task->epochs;
    c.sharpness.rho = task->rho;
    c.sharpness.m = 8;
    c.batch_size = 32;
    c.experiment.m_values = {2, 4, 8, 16, 32};
    c.data.num_classes = 2;
  } else {
    throw DomainError("unknown preset '" + std::string(name) + "'");
  }
  c.loss.weight_decay = c.optimizer.weight_decay;
  return c;
}

std::vector<std::string> preset_names() {
  return {"desk", "cnn_cifar", "wrn_cifar", "vit", "glue_cola", "glue_mrpc", "glue_sst2", "glue_qqp"};
}

namespace {

struct Entry {
  std::string where;
  std::string key;  // section.key
  std::string value;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Value decoders. Each throws a bare message; the caller attaches key/line.
struct BadValue {
  std::string message;
};

double to_real(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw BadValue{"expected a real number, got '" + std::string(s) + "'"};
  }
  return v;
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw BadValue{"expected a nonnegative integer, got '" + std::string(s) + "'"};
  }
  return v;
}

std::size_t to_size(std::string_view s) { return static_cast<std::size_t>(to_u64(s)); }

std::size_t to_positive(std::string_view s) {
  const std::size_t v = to_size(s);
  if (v == 0) throw BadValue{"must be positive"};
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw BadValue{"expected true or false, got '" + std::string(s) + "'"};
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> items;
  while (true) {
    const auto comma = s.find(',');
    const std::string_view item = trim(s.substr(0, comma));
    if (item.empty()) throw BadValue{"empty list element"};
    items.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return items;
}

template <typename T, typename F>
std::vector<T> to_list(std::string_view s, F&& convert) {
  std::vector<T> out;
  for (std::string_view item : split_list(s)) out.push_back(convert(item));
  return out;
}

double require(double v, bool ok, const char* what) {
  if (!ok) throw BadValue{what};
  return v;
}

template <typename F>
auto enum_value(F&& parse, std::string_view s) {
  try {
    return parse(s);
  } catch (const DomainError& e) {
    throw BadValue{e.what()};
  }
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;

    t["model.hidden_widths"] = [](RunConfig& c, std::string_view v) {
      const Activation act =
          c.model.hidden_layers.empty() ? Activation::relu : c.model.hidden_layers.front().activation;
      c.model.hidden_layers.clear();
      for (std::size_t width : to_list<std::size_t>(v, to_positive)) {
        c.model.hidden_layers.push_back({width, act});
      }
    };
    t["model.activation"] = [](RunConfig& c, std::string_view v) {
      const Activation act = enum_value(parse_activation, v);
      for (Layer& layer : c.model.hidden_layers) layer.activation = act;
    };

    t["data.kind"] = [](RunConfig& c, std::string_view v) { c.data.kind = enum_value(parse_data_kind, v); };
    t["data.n_per_class"] = [](RunConfig& c, std::string_view v) { c.data.n_per_class = to_positive(v); };
    t["data.n_test_per_class"] = [](RunConfig& c, std::string_view v) {
      c.data.n_test_per_class = to_positive(v);
    };
    t["data.num_classes"] = [](RunConfig& c, std::string_view v) {
      c.data.num_classes = to_size(v);
      if (c.data.num_classes < 2) throw BadValue{"must be at least 2"};
    };
    t["data.noise"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.data.noise = require(x, x >= 0.0, "must be nonnegative");
    };
    t["data.seed"] = [](RunConfig& c, std::string_view v) { c.data.seed = to_u64(v); };
    t["data.train_images"] = [](RunConfig& c, std::string_view v) { c.data.train_images = v; };
    t["data.train_labels"] = [](RunConfig& c, std::string_view v) { c.data.train_labels = v; };
    t["data.test_images"] = [](RunConfig& c, std::string_view v) { c.data.test_images = v; };
    t["data.test_labels"] = [](RunConfig& c, std::string_view v) { c.data.test_labels = v; };
    t["data.limit"] = [](RunConfig& c, std::string_view v) {
      const std::size_t n = to_size(v);
      c.data.limit = n == 0 ? std::nullopt : std::optional<std::size_t>(n);
    };

    t["loss.label_smoothing"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.loss.label_smoothing = require(x, x >= 0.0 && x < 1.0, "must be in [0, 1)");
    };

    t["optimizer.kind"] = [](RunConfig& c, std::string_view v) {
      c.optimizer.kind = enum_value(parse_optimizer_kind, v);
    };
    t["optimizer.lr"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.optimizer.lr = require(x, x > 0.0, "must be positive");
    };
    t["optimizer.momentum"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.optimizer.momentum = require(x, x >= 0.0 && x < 1.0, "must be in [0, 1)");
    };
    t["optimizer.beta1"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.optimizer.beta1 = require(x, x >= 0.0 && x < 1.0, "must be in [0, 1)");
    };
    t["optimizer.beta2"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.optimizer.beta2 = require(x, x >= 0.0 && x < 1.0, "must be in [0, 1)");
    };
    t["optimizer.eps"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.optimizer.eps = require(x, x > 0.0, "must be positive");
    };
    t["optimizer.weight_decay"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.optimizer.weight_decay = require(x, x >= 0.0, "must be nonnegative");
    };
    t["optimizer.grad_clip_norm"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      require(x, x >= 0.0, "must be nonnegative (0 disables clipping)");
      c.optimizer.grad_clip_norm = x == 0.0 ? std::nullopt : std::optional<double>(x);
    };

    t["schedule.warmup_fraction"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.warmup_fraction = require(x, x >= 0.0 && x < 1.0, "must be in [0, 1)");
    };

    t["sharpness.rho"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.sharpness.rho = require(x, x > 0.0, "must be positive");
    };
    t["sharpness.m"] = [](RunConfig& c, std::string_view v) { c.sharpness.m = to_positive(v); };
    t["sharpness.m_values"] = [](RunConfig& c, std::string_view v) {
      c.experiment.m_values = to_list<std::size_t>(v, to_positive);
    };
    t["sharpness.norm_order"] = [](RunConfig& c, std::string_view v) {
      if (to_size(v) != 2) throw BadValue{"only 2 is supported"};
      c.sharpness.norm_order = 2;
    };

    t["train.mode"] = [](RunConfig& c, std::string_view v) { c.mode = enum_value(parse_mode, v); };
    t["train.modes"] = [](RunConfig& c, std::string_view v) {
      c.experiment.modes = to_list<Mode>(v, [](std::string_view s) { return enum_value(parse_mode, s); });
    };
    t["train.epochs"] = [](RunConfig& c, std::string_view v) { c.epochs = to_size(v); };
    t["train.batch_size"] = [](RunConfig& c, std::string_view v) { c.batch_size = to_positive(v); };
    t["train.seeds"] = [](RunConfig& c, std::string_view v) {
      c.seeds = to_list<std::uint64_t>(v, to_u64);
    };

    t["switch.start_mode"] = [](RunConfig& c, std::string_view v) {
      SwitchSpec s = c.switch_spec.value_or(SwitchSpec{});
      s.start = enum_value(parse_start_mode, v);
      c.switch_spec = s;
    };
    t["switch.percent"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      SwitchSpec s = c.switch_spec.value_or(SwitchSpec{});
      s.percent = require(x, x >= 0.0 && x <= 100.0, "must be in [0, 100]");
      c.switch_spec = s;
    };
    t["switch.percents"] = [](RunConfig& c, std::string_view v) {
      c.experiment.switch_percents = to_list<double>(v, [](std::string_view s) {
        const double x = to_real(s);
        return require(x, x >= 0.0 && x <= 100.0, "percents must be in [0, 100]");
      });
    };
    t["switch.start_modes"] = [](RunConfig& c, std::string_view v) {
      c.experiment.start_modes = to_list<StartMode>(
          v, [](std::string_view s) { return enum_value(parse_start_mode, s); });
    };

    t["diagnostics.measure_lambda_max"] = [](RunConfig& c, std::string_view v) {
      c.diagnostics.measure_lambda_max = to_bool(v);
    };
    t["diagnostics.tol"] = [](RunConfig& c, std::string_view v) {
      const double x = to_real(v);
      c.diagnostics.power.tol = require(x, x > 0.0, "must be positive");
    };
    t["diagnostics.max_iters"] = [](RunConfig& c, std::string_view v) {
      c.diagnostics.power.max_iters = to_positive(v);
    };
    t["diagnostics.seed"] = [](RunConfig& c, std::string_view v) { c.diagnostics.power.seed = to_u64(v); };
    t["diagnostics.chunk_size"] = [](RunConfig& c, std::string_view v) {
      c.diagnostics.power.chunk_size = to_size(v);
    };

    t["runtime.warmup_epochs"] = [](RunConfig& c, std::string_view v) {
      c.experiment.runtime_warmup_epochs = to_size(v);
    };
    return t;
  }();
  return table;
}

std::vector<Entry> tokenize(std::string_view text) {
  std::vector<Entry> entries;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where, std::string(line), "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const char* known[] = {"model", "data", "loss", "optimizer", "schedule",
                                    "sharpness", "train", "switch", "diagnostics", "runtime"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known)) {
        throw ParseError(where, section, "unknown section");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(where, std::string(line), "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(where, key, "missing key");
    entries.push_back({where, section.empty() ? key : section + "." + key, value});
  }
  return entries;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys{"preset"};
  for (const auto& [key, setter] : setters()) keys.push_back(key);
  return keys;
}

RunConfig parse_config(std::string_view text, std::span<const std::string> overrides,
                       std::string_view default_preset) {
  std::vector<Entry> entries = tokenize(text);
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    const std::string where = "override " + std::to_string(i + 1);
    const auto eq = overrides[i].find('=');
    if (eq == std::string::npos) throw ParseError(where, overrides[i], "expected section.key=value");
    entries.push_back({where, std::string(trim(std::string_view(overrides[i]).substr(0, eq))),
                       std::string(trim(std::string_view(overrides[i]).substr(eq + 1)))});
  }

  std::string preset(default_preset);
  std::string preset_where = "default";
  for (const Entry& e : entries) {
    if (e.key == "preset") {
      preset = e.value;
      preset_where = e.where;
    }
  }
  RunConfig config;
  try {
    config = preset_config(preset);
  } catch (const DomainError& err) {
    throw ParseError(preset_where, "preset", err.what());
  }

  for (const Entry& e : entries) {
    if (e.key == "preset") continue;
    const auto it = setters().find(e.key);
    if (it == setters().end()) throw ParseError(e.where, e.key, "unknown key");
    try {
      it->second(config, e.value);
    } catch (const BadValue& bad) {
      throw ParseError(e.where, e.key, bad.message);
    }
  }
  config.loss.weight_decay = config.optimizer.weight_decay;

  try {
    config.validate();
  } catch (const DomainError& err) {
    throw ParseError("resolved config", "config", err.what());
  }
  for (std::size_t m : config.experiment.m_values) {
    if (m > config.batch_size) {
      throw ParseError("resolved config", "sharpness.m_values", "m exceeds train.batch_size");
    }
  }
  return config;
}

}  // namespace sharplab
