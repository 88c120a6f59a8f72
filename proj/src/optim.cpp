#include "sharplab/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sharplab/errors.hpp"

namespace sharplab {

std::string_view to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::adamw ? "adamw" : "sgd_momentum";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd_momentum" || name == "sgd") return OptimizerKind::sgd_momentum;
  if (name == "adamw") return OptimizerKind::adamw;
  throw DomainError("unknown optimizer '" + std::string(name) + "'");
}

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw DomainError("optimizer: lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("optimizer: momentum must be in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DomainError("optimizer: beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw DomainError("optimizer: beta2 must be in [0, 1)");
  if (!(eps > 0.0)) throw DomainError("optimizer: eps must be positive");
  if (!(weight_decay >= 0.0)) throw DomainError("optimizer: weight_decay must be nonnegative");
  if (grad_clip_norm && !(*grad_clip_norm > 0.0)) {
    throw DomainError("optimizer: grad_clip_norm must be positive");
  }
}

double clip_by_global_norm(std::span<double> g, double max_norm) {
  const double norm = norm2(g);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& v : g) v *= scale;
  }
  return norm;
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t dim)
    : config_(config), first_(dim, 0.0) {
  config_.validate();
  if (config_.kind == OptimizerKind::adamw) second_.assign(dim, 0.0);
}

void Optimizer::apply_update(ParamVector& w, std::span<const double> g, double lr) {
  if (w.size() != first_.size() || g.size() != first_.size()) {
    throw DomainError("optimizer: dimension mismatch");
  }
  std::span<const double> grad = g;
  if (config_.grad_clip_norm) {
    scratch_.assign(g.begin(), g.end());
    clip_by_global_norm(scratch_, *config_.grad_clip_norm);
    grad = scratch_;
  }
  ++step_count_;
  const double wd = config_.weight_decay;

  if (config_.kind == OptimizerKind::sgd_momentum) {
    const double mu = config_.momentum;
    for (std::size_t i = 0; i < w.size(); ++i) {
      first_[i] = mu * first_[i] + grad[i];
      w[i] -= lr * (first_[i] + wd * w[i]);
    }
    return;
  }

  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(step_count_);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < w.size(); ++i) {
    first_[i] = b1 * first_[i] + (1.0 - b1) * grad[i];
    second_[i] = b2 * second_[i] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = first_[i] / correction1;
    const double v_hat = second_[i] / correction2;
    w[i] -= lr * (m_hat / (std::sqrt(v_hat) + config_.eps) + wd * w[i]);
  }
}

void LrSchedule::validate() const {
  if (!(peak_lr > 0.0)) throw DomainError("schedule: peak_lr must be positive");
  if (total_steps == 0) throw DomainError("schedule: total_steps must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw DomainError("schedule: warmup_fraction must be in [0, 1)");
  }
}

std::size_t LrSchedule::warmup_steps() const {
  return static_cast<std::size_t>(
      std::ceil(warmup_fraction * static_cast<double>(total_steps)));
}

double LrSchedule::lr_at(std::size_t step) const {
  validate();
  if (step >= total_steps) throw DomainError("schedule: step out of range");
  const double start = peak_lr / kStartDivisor;
  const double floor = peak_lr / kFloorDivisor;
  const std::size_t warmup = warmup_steps();
  if (step < warmup) {
    return start + (peak_lr - start) * static_cast<double>(step) / static_cast<double>(warmup);
  }
  const std::size_t last = total_steps - 1;
  if (step >= last && last > warmup) return floor;
  if (last <= warmup) return peak_lr;  // no room for a decay phase
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(last - warmup);
  return floor + (peak_lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace sharplab
