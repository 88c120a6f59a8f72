#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sharplab/model.hpp"
#include "sharplab/param_vector.hpp"

namespace sharplab {

struct PowerIterationOptions {
  double tol = 1e-3;
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;
  /// Samples per HVP chunk; 0 evaluates the whole dataset at once.
  std::size_t chunk_size = 0;
};

struct SharpnessReport {
  /// Signed Rayleigh quotient at the last iterate.
  double lambda_max = 0.0;
  std::size_t iterations_used = 0;
  double rel_change_at_stop = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;
  /// Set when the dominant-magnitude eigenvalue found is negative, i.e. the
  /// estimate is of |lambda|max rather than the algebraically largest one.
  bool negative_dominant = false;
  /// Rayleigh quotient after every iteration.
  std::vector<double> trace;
};

/// H v for the mean loss over `dataset`, assembled as the size-weighted mean
/// of per-chunk HVPs in chunk order.
ParamVector dataset_hvp(const Objective& objective, std::span<const double> w,
                        std::span<const double> v, BatchView dataset, std::size_t chunk_size);

/// Dominant Hessian eigenvalue of the full-dataset loss by power iteration on
/// finite-difference HVPs. Stops when the relative change of the Rayleigh
/// quotient drops below opts.tol or after opts.max_iters iterations.
SharpnessReport lambda_max(const Objective& objective, std::span<const double> w,
                           BatchView dataset, const PowerIterationOptions& opts = {});

}  // namespace sharplab
