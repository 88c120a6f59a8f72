#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sharplab/model.hpp"
#include "sharplab/param_vector.hpp"

namespace sharplab {

/// Gradient norms below this are treated as zero and the ascent step is
/// skipped (the normalized direction is undefined there).
inline constexpr double kZeroGradNorm = 1e-12;

enum class ZeroGradPolicy { skip_perturbation };

struct SharpnessConfig {
  double rho = 0.05;
  /// Number of micro-batches. 1 reproduces SAM.
  std::size_t m = 1;
  int norm_order = 2;
  ZeroGradPolicy zero_grad_policy = ZeroGradPolicy::skip_perturbation;

  void validate() const;
};

/// Ascent step eps = rho * g / |g|_2, the maximizer of the linearized loss
/// over the rho-ball. Returns zeros when |g|_2 < kZeroGradNorm. rho = 0 is
/// accepted and yields zeros.
ParamVector sam_perturbation(std::span<const double> g, double rho);

/// grad L(w + eps(grad L(w))). Exactly two gradient evaluations on `batch`.
ParamVector sam_gradient(const Objective& objective, std::span<const double> w,
                         BatchView batch, double rho);

/// Disjoint covering split of a minibatch into m shards of positions
/// [0, batch_size). Indices inside each shard are kept ascending.
class MicroBatchPartition {
 public:
  /// Validates that the shards are nonempty, pairwise disjoint and cover
  /// [0, batch_size).
  MicroBatchPartition(std::vector<std::vector<std::size_t>> shards, std::size_t batch_size);

  std::size_t size() const noexcept { return shards_.size(); }
  std::size_t batch_size() const noexcept { return batch_size_; }
  const std::vector<std::size_t>& shard(std::size_t i) const { return shards_.at(i); }
  const std::vector<std::vector<std::size_t>>& shards() const noexcept { return shards_; }

 private:
  std::vector<std::vector<std::size_t>> shards_;
  std::size_t batch_size_;
};

/// Seeded shuffle of positions, then a contiguous balanced split: the first
/// batch_size % m shards get one extra element.
MicroBatchPartition partition_minibatch(std::size_t batch_size, std::size_t m,
                                        std::uint64_t seed);

/// mSAM gradient: for each shard S_i, an independent ascent step from the
/// shard gradient, then the shard gradient at the perturbed point. Results are
/// combined as sum_i (|S_i| / |S|) h_i in shard order. 2m gradient evaluations.
ParamVector msam_gradient(const Objective& objective, std::span<const double> w,
                          BatchView batch, const MicroBatchPartition& partition, double rho);

}  // namespace sharplab
