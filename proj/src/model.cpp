#include "sharplab/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sharplab/errors.hpp"
#include "sharplab/rng.hpp"

namespace sharplab {

Batch make_batch(std::span<const Sample> samples) {
  Batch batch;
  batch.reserve(samples.size());
  for (const Sample& s : samples) batch.push_back(&s);
  return batch;
}

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw DomainError("unknown activation '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw DomainError("model: input_dim must be positive");
  if (num_classes < 2) throw DomainError("model: num_classes must be at least 2");
  for (const Layer& layer : hidden_layers) {
    if (layer.width == 0) throw DomainError("model: hidden widths must be positive");
  }
}

std::size_t ModelSpec::param_count() const {
  std::size_t count = 0;
  std::size_t in = input_dim;
  for (const Layer& layer : hidden_layers) {
    count += in * layer.width + layer.width;
    in = layer.width;
  }
  return count + in * num_classes + num_classes;
}

void LossConfig::validate() const {
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw DomainError("loss: label_smoothing must be in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw DomainError("loss: weight_decay must be nonnegative");
}

ParamVector Objective::grad(std::span<const double> w, BatchView batch) const {
  ParamVector out(dim());
  gradient(w, batch, out.span());
  return out;
}

ParamVector hvp(const Objective& objective, std::span<const double> w,
                std::span<const double> v, BatchView batch) {
  if (v.size() != w.size()) throw DomainError("hvp: direction dimension mismatch");
  const double vnorm = norm2(v);
  if (!(vnorm > 0.0)) throw DomainError("hvp: zero direction");

  ParamVector plus(std::vector<double>(w.begin(), w.end()));
  ParamVector minus = plus;
  const double step = kHvpStep / vnorm;
  axpy(step, v, plus.span());
  axpy(-step, v, minus.span());

  ParamVector hv = objective.grad(plus, batch);
  const ParamVector g_minus = objective.grad(minus, batch);
  const double scale = vnorm / (2.0 * kHvpStep);
  for (std::size_t i = 0; i < hv.size(); ++i) hv[i] = (hv[i] - g_minus[i]) * scale;
  return hv;
}

// ---------------------------------------------------------------------------
// Mlp

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: break;
  }
  return z;
}

// Derivative expressed through the pre-activation z and the output y.
double activate_prime(Activation a, double z, double y) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::identity: break;
  }
  return 1.0;
}

}  // namespace

Mlp::Mlp(ModelSpec spec, LossConfig loss) : spec_(std::move(spec)), loss_(loss) {
  spec_.validate();
  loss_.validate();
  std::size_t in = spec_.input_dim;
  std::size_t offset = 0;
  auto add = [&](std::size_t out, Activation act) {
    layers_.push_back({in, out, offset, offset + in * out, act});
    offset += in * out + out;
    in = out;
  };
  for (const Layer& layer : spec_.hidden_layers) add(layer.width, layer.activation);
  add(spec_.num_classes, Activation::identity);
  dim_ = offset;
}

void Mlp::check(std::span<const double> w, BatchView batch) const {
  if (w.size() != dim_) throw DomainError("mlp: parameter dimension mismatch");
  if (batch.empty()) throw DomainError("mlp: empty batch");
}

void Mlp::forward(std::span<const double> w, const Sample& sample,
                  std::vector<std::vector<double>>& pre,
                  std::vector<std::vector<double>>& act) const {
  if (sample.features.size() != spec_.input_dim) {
    throw DomainError("mlp: sample feature dimension mismatch");
  }
  if (sample.label >= spec_.num_classes) throw DomainError("mlp: label out of range");
  act[0].assign(sample.features.begin(), sample.features.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerShape& shape = layers_[l];
    const double* weights = w.data() + shape.weight_offset;
    const double* bias = w.data() + shape.bias_offset;
    const std::vector<double>& x = act[l];
    std::vector<double>& z = pre[l];
    std::vector<double>& y = act[l + 1];
    z.resize(shape.out);
    y.resize(shape.out);
    for (std::size_t o = 0; o < shape.out; ++o) {
      const double* row = weights + o * shape.in;
      double acc = bias[o];
      for (std::size_t i = 0; i < shape.in; ++i) acc += row[i] * x[i];
      z[o] = acc;
      y[o] = activate(shape.activation, acc);
    }
  }
}

// Smoothed target: (1 - s) on the label, s / (C - 1) elsewhere. Returns the
// cross-entropy and writes dloss/dlogits = softmax - target.
double Mlp::sample_loss(std::span<const double> logits, std::size_t label,
                        std::span<double> dlogits) const {
  const std::size_t classes = logits.size();
  const double s = loss_.label_smoothing;
  const double off_target = s / static_cast<double>(classes - 1);
  const double on_target = 1.0 - s;

  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - peak);
  const double lse = peak + std::log(sum);

  double loss = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    const double target = k == label ? on_target : off_target;
    const double log_p = logits[k] - lse;
    if (target != 0.0) loss -= target * log_p;
    if (!dlogits.empty()) dlogits[k] = std::exp(log_p) - target;
  }
  return loss;
}

double Mlp::loss(std::span<const double> w, BatchView batch) const {
  check(w, batch);
  std::vector<std::vector<double>> pre(layers_.size());
  std::vector<std::vector<double>> act(layers_.size() + 1);
  double total = 0.0;
  for (const Sample* sample : batch) {
    forward(w, *sample, pre, act);
    total += sample_loss(act.back(), sample->label, {});
  }
  return total / static_cast<double>(batch.size());
}

void Mlp::gradient(std::span<const double> w, BatchView batch, std::span<double> out) const {
  check(w, batch);
  if (out.size() != dim_) throw DomainError("mlp: gradient buffer dimension mismatch");
  std::fill(out.begin(), out.end(), 0.0);

  std::vector<std::vector<double>> pre(layers_.size());
  std::vector<std::vector<double>> act(layers_.size() + 1);
  std::vector<double> delta;
  std::vector<double> upstream;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (const Sample* sample : batch) {
    forward(w, *sample, pre, act);
    delta.resize(spec_.num_classes);
    sample_loss(act.back(), sample->label, delta);
    for (double& d : delta) d *= inv_n;

    for (std::size_t l = layers_.size(); l-- > 0;) {
      const LayerShape& shape = layers_[l];
      const std::vector<double>& x = act[l];
      double* gw = out.data() + shape.weight_offset;
      double* gb = out.data() + shape.bias_offset;
      for (std::size_t o = 0; o < shape.out; ++o) {
        const double d = delta[o];
        gb[o] += d;
        double* row = gw + o * shape.in;
        for (std::size_t i = 0; i < shape.in; ++i) row[i] += d * x[i];
      }
      if (l == 0) break;

      const double* weights = w.data() + shape.weight_offset;
      upstream.assign(shape.in, 0.0);
      for (std::size_t o = 0; o < shape.out; ++o) {
        const double d = delta[o];
        const double* row = weights + o * shape.in;
        for (std::size_t i = 0; i < shape.in; ++i) upstream[i] += row[i] * d;
      }
      const Activation below = layers_[l - 1].activation;
      for (std::size_t i = 0; i < shape.in; ++i) {
        upstream[i] *= activate_prime(below, pre[l - 1][i], x[i]);
      }
      delta.swap(upstream);
    }
  }
}

std::vector<double> Mlp::logits(std::span<const double> w, const Sample& sample) const {
  if (w.size() != dim_) throw DomainError("mlp: parameter dimension mismatch");
  std::vector<std::vector<double>> pre(layers_.size());
  std::vector<std::vector<double>> act(layers_.size() + 1);
  forward(w, sample, pre, act);
  return act.back();
}

std::size_t Mlp::predict(std::span<const double> w, const Sample& sample) const {
  const std::vector<double> z = logits(w, sample);
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

double Mlp::accuracy(std::span<const double> w, BatchView batch) const {
  check(w, batch);
  std::size_t correct = 0;
  for (const Sample* sample : batch) correct += predict(w, *sample) == sample->label;
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

ParamVector init_params(const ModelSpec& spec) {
  spec.validate();
  ParamVector w(spec.param_count());
  Rng rng(spec.init_seed);
  std::size_t offset = 0;
  std::size_t in = spec.input_dim;
  auto fill_layer = [&](std::size_t out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t k = 0; k < in * out; ++k) w[offset + k] = rng.uniform(-bound, bound);
    offset += in * out + out;  // biases stay zero
    in = out;
  };
  for (const Layer& layer : spec.hidden_layers) fill_layer(layer.width);
  fill_layer(spec.num_classes);
  return w;
}

// ---------------------------------------------------------------------------
// QuadraticObjective

QuadraticObjective::QuadraticObjective(std::size_t dim) : center_(dim, 0.0) {
  if (dim == 0) throw DomainError("quadratic: dimension must be positive");
}

QuadraticObjective::QuadraticObjective(std::vector<double> center)
    : center_(std::move(center)) {
  if (center_.empty()) throw DomainError("quadratic: dimension must be positive");
}

void QuadraticObjective::check(std::span<const double> w, BatchView batch) const {
  if (w.size() != center_.size()) throw DomainError("quadratic: dimension mismatch");
  if (batch.empty()) throw DomainError("quadratic: empty batch");
  for (const Sample* s : batch) {
    if (s->features.size() != center_.size()) {
      throw DomainError("quadratic: curvature dimension mismatch");
    }
  }
}

double QuadraticObjective::loss(std::span<const double> w, BatchView batch) const {
  check(w, batch);
  double total = 0.0;
  for (const Sample* s : batch) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double d = w[j] - center_[j];
      total += 0.5 * s->features[j] * d * d;
    }
  }
  return total / static_cast<double>(batch.size());
}

void QuadraticObjective::gradient(std::span<const double> w, BatchView batch,
                                  std::span<double> out) const {
  check(w, batch);
  if (out.size() != center_.size()) throw DomainError("quadratic: gradient buffer mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (const Sample* s : batch) {
    for (std::size_t j = 0; j < w.size(); ++j) out[j] += s->features[j] * (w[j] - center_[j]);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (double& g : out) g *= inv_n;
}

}  // namespace sharplab
