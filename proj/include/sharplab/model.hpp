#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sharplab/param_vector.hpp"

namespace sharplab {

struct Sample {
  std::vector<double> features;
  std::size_t label = 0;
};

/// Non-owning view of a minibatch. The samples must outlive the view.
using BatchView = std::span<const Sample* const>;
using Batch = std::vector<const Sample*>;

Batch make_batch(std::span<const Sample> samples);

enum class Activation { identity, relu, tanh };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct Layer {
  std::size_t width = 0;
  Activation activation = Activation::relu;
};

/// Fully-connected network description. The output layer (num_classes wide,
/// identity activation) is implicit.
struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<Layer> hidden_layers;
  std::size_t num_classes = 0;
  std::uint64_t init_seed = 0;

  void validate() const;
  std::size_t param_count() const;
};

struct LossConfig {
  double label_smoothing = 0.0;
  /// Applied by the optimizer; recorded here so a run config is complete.
  double weight_decay = 0.0;

  void validate() const;
};

/// A differentiable empirical loss L_S(w) = mean over the batch of a
/// per-sample loss. Implementations are stateless and thread-safe.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;
  virtual double loss(std::span<const double> w, BatchView batch) const = 0;
  /// Writes the gradient of loss(w, batch) into `out` (overwriting it).
  virtual void gradient(std::span<const double> w, BatchView batch,
                        std::span<double> out) const = 0;

  ParamVector grad(std::span<const double> w, BatchView batch) const;
};

/// Hessian-vector product by central differences of the gradient along the
/// unit direction v/|v|, rescaled by |v|.
ParamVector hvp(const Objective& objective, std::span<const double> w,
                std::span<const double> v, BatchView batch);

inline constexpr double kHvpStep = 1e-4;

/// Parameter layout per layer: weights (out x in, row-major) then biases.
/// Hidden layers use their declared activation; the output layer is linear
/// and feeds a label-smoothed softmax cross-entropy.
class Mlp final : public Objective {
 public:
  Mlp(ModelSpec spec, LossConfig loss);

  const ModelSpec& spec() const noexcept { return spec_; }
  const LossConfig& loss_config() const noexcept { return loss_; }

  std::size_t dim() const override { return dim_; }
  double loss(std::span<const double> w, BatchView batch) const override;
  void gradient(std::span<const double> w, BatchView batch,
                std::span<double> out) const override;

  std::vector<double> logits(std::span<const double> w, const Sample& sample) const;
  std::size_t predict(std::span<const double> w, const Sample& sample) const;
  double accuracy(std::span<const double> w, BatchView batch) const;

 private:
  struct LayerShape {
    std::size_t in;
    std::size_t out;
    std::size_t weight_offset;
    std::size_t bias_offset;
    Activation activation;
  };

  void check(std::span<const double> w, BatchView batch) const;
  void forward(std::span<const double> w, const Sample& sample,
               std::vector<std::vector<double>>& pre,
               std::vector<std::vector<double>>& act) const;
  double sample_loss(std::span<const double> logits, std::size_t label,
                     std::span<double> dlogits) const;

  ModelSpec spec_;
  LossConfig loss_;
  std::vector<LayerShape> layers_;
  std::size_t dim_ = 0;
};

/// Scaled-uniform fan-in/fan-out initialization (bound sqrt(6/(fan_in+fan_out)))
/// with zero biases, deterministic in spec.init_seed.
ParamVector init_params(const ModelSpec& spec);

/// Separable quadratic L_S(w) = mean_i sum_j f_ij (w_j - c_j)^2 / 2 where f_i
/// are the sample features. Constant Hessian diag(mean_i f_i), which makes it
/// the reference problem for the sharpness and curvature routines.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(std::size_t dim);
  explicit QuadraticObjective(std::vector<double> center);

  std::size_t dim() const override { return center_.size(); }
  double loss(std::span<const double> w, BatchView batch) const override;
  void gradient(std::span<const double> w, BatchView batch,
                std::span<double> out) const override;

 private:
  void check(std::span<const double> w, BatchView batch) const;
  std::vector<double> center_;
};

}  // namespace sharplab

namespace sharplab {

/// Decorator that counts gradient evaluations and the number of per-sample
/// gradients they cover. Counters are atomic so the wrapped objective stays
/// safe to share.
class CountingObjective final : public Objective {
 public:
  explicit CountingObjective(const Objective& inner) : inner_(inner) {}

  std::size_t dim() const override { return inner_.dim(); }
  double loss(std::span<const double> w, BatchView batch) const override {
    return inner_.loss(w, batch);
  }
  void gradient(std::span<const double> w, BatchView batch,
                std::span<double> out) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    samples_.fetch_add(batch.size(), std::memory_order_relaxed);
    inner_.gradient(w, batch, out);
  }

  std::uint64_t gradient_calls() const noexcept { return calls_.load(); }
  std::uint64_t sample_gradients() const noexcept { return samples_.load(); }
  void reset() noexcept {
    calls_ = 0;
    samples_ = 0;
  }

 private:
  const Objective& inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
  mutable std::atomic<std::uint64_t> samples_{0};
};

}  // namespace sharplab
