#include "sharplab/sharpness.hpp"

#include <algorithm>

#include "sharplab/errors.hpp"
#include "sharplab/rng.hpp"

namespace sharplab {

void SharpnessConfig::validate() const {
  if (!(rho > 0.0)) throw DomainError("sharpness: rho must be positive");
  if (m == 0) throw DomainError("sharpness: m must be at least 1");
  if (norm_order != 2) throw DomainError("sharpness: only norm_order = 2 is supported");
}

ParamVector sam_perturbation(std::span<const double> g, double rho) {
  if (!(rho >= 0.0)) throw DomainError("sam_perturbation: rho must be nonnegative");
  ParamVector eps(g.size());
  const double norm = norm2(g);
  if (norm < kZeroGradNorm || rho == 0.0) return eps;
  const double scale = rho / norm;
  for (std::size_t i = 0; i < g.size(); ++i) eps[i] = scale * g[i];
  return eps;
}

namespace {

// grad at w + eps(g) where g = grad at w. The caller's `w` is not modified.
ParamVector perturbed_gradient(const Objective& objective, std::span<const double> w,
                               BatchView batch, double rho) {
  const ParamVector g = objective.grad(w, batch);
  const ParamVector eps = sam_perturbation(g, rho);
  ParamVector ascended(std::vector<double>(w.begin(), w.end()));
  for (std::size_t i = 0; i < ascended.size(); ++i) ascended[i] += eps[i];
  return objective.grad(ascended, batch);
}

}  // namespace

ParamVector sam_gradient(const Objective& objective, std::span<const double> w,
                         BatchView batch, double rho) {
  if (batch.empty()) throw DomainError("sam_gradient: empty batch");
  return perturbed_gradient(objective, w, batch, rho);
}

MicroBatchPartition::MicroBatchPartition(std::vector<std::vector<std::size_t>> shards,
                                         std::size_t batch_size)
    : shards_(std::move(shards)), batch_size_(batch_size) {
  if (shards_.empty()) throw DomainError("partition: no shards");
  std::vector<bool> seen(batch_size, false);
  std::size_t covered = 0;
  for (const auto& shard : shards_) {
    if (shard.empty()) throw DomainError("partition: empty shard");
    for (std::size_t idx : shard) {
      if (idx >= batch_size) throw DomainError("partition: index outside batch");
      if (seen[idx]) throw DomainError("partition: shards overlap");
      seen[idx] = true;
      ++covered;
    }
  }
  if (covered != batch_size) throw DomainError("partition: shards do not cover batch");
}

MicroBatchPartition partition_minibatch(std::size_t batch_size, std::size_t m,
                                        std::uint64_t seed) {
  if (m == 0) throw DomainError("partition: m must be at least 1");
  if (m > batch_size) throw DomainError("partition: m exceeds batch size");

  std::vector<std::size_t> order(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) order[i] = i;
  if (m > 1) {
    Rng rng(seed);
    rng.shuffle(order);
  }

  std::vector<std::vector<std::size_t>> shards(m);
  const std::size_t base = batch_size / m;
  const std::size_t extra = batch_size % m;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    shards[i].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                     order.begin() + static_cast<std::ptrdiff_t>(cursor + len));
    std::sort(shards[i].begin(), shards[i].end());
    cursor += len;
  }
  return MicroBatchPartition(std::move(shards), batch_size);
}

ParamVector msam_gradient(const Objective& objective, std::span<const double> w,
                          BatchView batch, const MicroBatchPartition& partition, double rho) {
  if (batch.empty()) throw DomainError("msam_gradient: empty batch");
  if (partition.batch_size() != batch.size()) {
    throw DomainError("msam_gradient: partition does not match batch size");
  }

  const double total = static_cast<double>(batch.size());
  ParamVector result;
  Batch shard_batch;
  for (const auto& shard : partition.shards()) {
    shard_batch.clear();
    for (std::size_t idx : shard) shard_batch.push_back(batch[idx]);
    ParamVector h = perturbed_gradient(objective, w, shard_batch, rho);
    const double weight = static_cast<double>(shard.size()) / total;
    if (result.empty()) {
      // First term is taken as-is so m = 1 reproduces SAM bit for bit.
      if (weight != 1.0) {
        for (double& v : h) v *= weight;
      }
      result = std::move(h);
    } else {
      axpy(weight, h, result.span());
    }
  }
  return result;
}

}  // namespace sharplab
