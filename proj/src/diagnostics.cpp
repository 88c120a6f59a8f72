#include "sharplab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sharplab/errors.hpp"
#include "sharplab/rng.hpp"

namespace sharplab {

namespace {

constexpr double kUnderflow = 1e-15;

}  // namespace

ParamVector dataset_hvp(const Objective& objective, std::span<const double> w,
                        std::span<const double> v, BatchView dataset, std::size_t chunk_size) {
  if (dataset.empty()) throw DomainError("dataset_hvp: empty dataset");
  if (chunk_size == 0 || chunk_size >= dataset.size()) return hvp(objective, w, v, dataset);

  const double total = static_cast<double>(dataset.size());
  ParamVector acc(w.size());
  for (std::size_t start = 0; start < dataset.size(); start += chunk_size) {
    const std::size_t len = std::min(chunk_size, dataset.size() - start);
    const ParamVector part = hvp(objective, w, v, dataset.subspan(start, len));
    axpy(static_cast<double>(len) / total, part, acc.span());
  }
  return acc;
}

SharpnessReport lambda_max(const Objective& objective, std::span<const double> w,
                           BatchView dataset, const PowerIterationOptions& opts) {
  if (dataset.empty()) throw DomainError("lambda_max: empty dataset");
  if (opts.max_iters == 0) throw DomainError("lambda_max: max_iters must be positive");
  if (!(opts.tol > 0.0)) throw DomainError("lambda_max: tol must be positive");

  SharpnessReport report;
  report.seed = opts.seed;
  report.rel_change_at_stop = std::numeric_limits<double>::infinity();

  Rng rng(opts.seed);
  ParamVector v(w.size());
  for (double& x : v) x = rng.normal();
  const double start_norm = norm2(v);
  for (double& x : v) x /= start_norm;

  double previous = 0.0;
  for (std::size_t k = 1; k <= opts.max_iters; ++k) {
    const ParamVector hv = dataset_hvp(objective, w, v, dataset, opts.chunk_size);
    const double rayleigh = dot(v, hv);
    report.lambda_max = rayleigh;
    report.iterations_used = k;
    report.trace.push_back(rayleigh);

    if (k > 1) {
      report.rel_change_at_stop =
          std::abs(rayleigh - previous) / std::max(std::abs(rayleigh), 1e-12);
      if (report.rel_change_at_stop < opts.tol) {
        report.converged = true;
        break;
      }
    }
    previous = rayleigh;

    const double hv_norm = norm2(hv);
    if (hv_norm < kUnderflow) break;  // reported as non-converged
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = hv[i] / hv_norm;
  }
  report.negative_dominant = report.lambda_max < 0.0;
  return report;
}

}  // namespace sharplab
