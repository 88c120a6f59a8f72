#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sharplab/param_vector.hpp"

namespace sharplab {

enum class OptimizerKind { sgd_momentum, adamw };

std::string_view to_string(OptimizerKind kind) noexcept;
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd_momentum;
  double lr = 0.1;  // peak learning rate; the schedule supplies per-step values
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::optional<double> grad_clip_norm;

  void validate() const;
};

/// Rescales g in place so that |g|_2 <= max_norm. Returns the pre-clip norm.
double clip_by_global_norm(std::span<double> g, double max_norm);

/// Base optimizer state for one training run. Buffers are sized at
/// construction and carried across mode switches untouched.
///
/// sgd_momentum: buf <- mu * buf + g;  w <- w - lr * (buf + wd * w)
/// adamw:        bias-corrected Adam moments with decoupled weight decay,
///               w <- w - lr * (m_hat / (sqrt(v_hat) + eps) + wd * w)
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::size_t dim);

  /// One step. Gradient clipping (when configured) is applied to a copy of g.
  void apply_update(ParamVector& w, std::span<const double> g, double lr);

  const OptimizerConfig& config() const noexcept { return config_; }
  std::uint64_t step_count() const noexcept { return step_count_; }
  const std::vector<double>& first_buffer() const noexcept { return first_; }
  const std::vector<double>& second_buffer() const noexcept { return second_; }

 private:
  OptimizerConfig config_;
  std::vector<double> first_;   // momentum buffer or Adam first moment
  std::vector<double> second_;  // Adam second moment (empty for SGD)
  std::vector<double> scratch_;
  std::uint64_t step_count_ = 0;
};

/// One-cycle schedule: linear warmup from peak/25 to peak over
/// ceil(warmup_fraction * total_steps) steps, then cosine decay to peak/1e4
/// at the last step.
struct LrSchedule {
  double peak_lr = 0.1;
  std::size_t total_steps = 1;
  double warmup_fraction = 0.05;

  static constexpr double kStartDivisor = 25.0;
  static constexpr double kFloorDivisor = 1e4;

  void validate() const;
  std::size_t warmup_steps() const;
  double lr_at(std::size_t step) const;
};

}  // namespace sharplab
