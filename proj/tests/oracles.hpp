#pragma once

// Reference computations for the test suites. Each one reaches the quantity
// through a different route from the library code it is compared against.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "sharplab/model.hpp"

namespace sharplab::oracle {

/// Central finite difference of objective.loss along coordinate j with step
/// h = 1e-5 * max(1, |w_j|).
inline double fd_partial(const Objective& obj, std::span<const double> w, BatchView batch,
                         std::size_t j) {
  std::vector<double> probe(w.begin(), w.end());
  const double h = 1e-5 * std::max(1.0, std::abs(w[j]));
  probe[j] = w[j] + h;
  const double up = obj.loss(probe, batch);
  probe[j] = w[j] - h;
  const double down = obj.loss(probe, batch);
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Dense Hessian, column j = (grad(w + h e_j) - grad(w - h e_j)) / 2h,
/// symmetrized.
inline Eigen::MatrixXd dense_hessian(const Objective& obj, std::span<const double> w,
                                     BatchView batch, double h = 1e-5) {
  const auto d = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd hess(d, d);
  std::vector<double> probe(w.begin(), w.end());
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    probe[uj] = w[uj] + h;
    const ParamVector up = obj.grad(probe, batch);
    probe[uj] = w[uj] - h;
    const ParamVector down = obj.grad(probe, batch);
    probe[uj] = w[uj];
    for (Eigen::Index i = 0; i < d; ++i) {
      hess(i, j) = (up[static_cast<std::size_t>(i)] - down[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
  }
  return 0.5 * (hess + hess.transpose());
}

/// Eigenvalue of largest magnitude (what power iteration converges to).
inline double dominant_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  const auto& ev = solver.eigenvalues();
  return std::abs(ev(0)) > std::abs(ev(ev.size() - 1)) ? ev(0) : ev(ev.size() - 1);
}

inline Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& sym) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues();
}

/// Direct softmax cross-entropy in extended precision, re-deriving the
/// parameter layout (per layer: W row-major out x in, then b) from the spec.
inline long double mlp_loss_extended(const ModelSpec& spec, double smoothing,
                                     std::span<const double> w, std::span<const Sample> samples) {
  long double total = 0.0L;
  for (const Sample& s : samples) {
    std::vector<long double> x(s.features.begin(), s.features.end());
    std::size_t offset = 0;
    const std::size_t layers = spec.hidden_layers.size() + 1;
    for (std::size_t l = 0; l < layers; ++l) {
      const bool output = l + 1 == layers;
      const std::size_t out = output ? spec.num_classes : spec.hidden_layers[l].width;
      const Activation act = output ? Activation::identity : spec.hidden_layers[l].activation;
      const std::size_t bias = offset + out * x.size();
      std::vector<long double> y(out);
      for (std::size_t o = 0; o < out; ++o) {
        long double z = w[bias + o];
        for (std::size_t i = 0; i < x.size(); ++i) z += static_cast<long double>(w[offset + o * x.size() + i]) * x[i];
        if (act == Activation::relu) z = z > 0 ? z : 0;
        if (act == Activation::tanh) z = std::tanh(z);
        y[o] = z;
      }
      offset = bias + out;
      x = std::move(y);
    }
    long double denom = 0.0L;
    for (long double z : x) denom += std::exp(z);
    const std::size_t c = spec.num_classes;
    for (std::size_t k = 0; k < c; ++k) {
      const long double target = k == s.label ? 1.0L - smoothing : smoothing / (c - 1.0L);
      if (target != 0.0L) total -= target * std::log(std::exp(x[k]) / denom);
    }
  }
  return total / static_cast<long double>(samples.size());
}

/// Random samples with features ~ N(0, scale^2) and uniform labels.
inline std::vector<Sample> random_samples(std::size_t n, std::size_t dim, std::size_t classes,
                                          std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> feature(0.0, scale);
  std::uniform_int_distribution<std::size_t> label(0, classes - 1);
  std::vector<Sample> out(n);
  for (Sample& s : out) {
    s.features.resize(dim);
    for (double& f : s.features) f = feature(gen);
    s.label = label(gen);
  }
  return out;
}

inline ParamVector random_params(std::size_t d, std::mt19937_64& gen, double scale = 0.5) {
  std::normal_distribution<double> dist(0.0, scale);
  ParamVector w(d);
  for (double& x : w) x = dist(gen);
  return w;
}

}  // namespace sharplab::oracle
