#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gtn/mlp.hpp"
#include "gtn/point_set.hpp"

namespace gtn::testing {

// Gradients below the floor sit at the roundoff level of the differences, so
// they are compared on an absolute scale instead.
inline constexpr double kGradientFloor = 1e-5;

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kGradientFloor});
}

// Signs of every hidden pre-activation, computed with plain loops. Two
// parameter values with the same signature lie on the same smooth piece of
// the LeakyReLU network.
inline std::vector<char> kink_signature(const MlpModel& model, const PointSet& batch) {
  const std::size_t n = batch.size();
  std::vector<double> act(batch.values().begin(), batch.values().end());
  std::size_t in = batch.dim();
  std::vector<char> signs;
  for (std::size_t l = 0; model.is_hidden(l); ++l) {
    const std::size_t out = model.out_dim(l);
    const auto w = model.weights(l);
    const auto b = model.bias(l);
    std::vector<double> next(n * out);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < out; ++j) {
        double z = b(j);
        for (std::size_t k = 0; k < in; ++k) z += w(j, k) * act[i * in + k];
        signs.push_back(z > 0);
        next[i * out + j] = z > 0 ? z : model.config().leaky_slope * z;
      }
    }
    if (model.has_batch_norm(l)) {
      for (std::size_t j = 0; j < out; ++j) {
        double mean = 0.0, var = 0.0;
        if (model.train_mode) {
          for (std::size_t i = 0; i < n; ++i) mean += next[i * out + j] / n;
          for (std::size_t i = 0; i < n; ++i) var += (next[i * out + j] - mean) * (next[i * out + j] - mean) / n;
        } else {
          mean = model.running_mean(l)(j);
          var = model.running_var(l)(j);
        }
        for (std::size_t i = 0; i < n; ++i) {
          auto& v = next[i * out + j];
          v = model.bn_scale(l)(j) * (v - mean) / std::sqrt(var + kBatchNormEpsilon) + model.bn_shift(l)(j);
        }
      }
    }
    act = std::move(next);
    in = out;
  }
  return signs;
}

// Worst relative error between backward() and central differences of the
// loss over every trainable parameter. Per parameter the step starts at h and
// shrinks while the stencil crosses a kink (differences there are
// meaningless) or the two Richardson levels still disagree (strong curvature).
inline double worst_gradient_error(MlpModel model, const PointSet& batch, const PointSet& target, double h = 1e-4) {
  const auto grads = backward(model, batch, target);
  const auto base = kink_signature(model, batch);
  double worst = 0.0;
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    auto smooth_at = [&](double e) {
      bool same = true;
      for (const double v : {saved + e, saved - e}) {
        params[i] = v;
        same = same && kink_signature(model, batch) == base;
      }
      params[i] = saved;
      return same;
    };
    auto central = [&](double e) {
      params[i] = saved + e;
      const double up = mse_loss(forward(model, batch), target);
      params[i] = saved - e;
      const double down = mse_loss(forward(model, batch), target);
      params[i] = saved;
      return (up - down) / (2 * e);
    };
    double numeric = 0.0;
    for (double step = h; step >= h * 1e-6; step /= 10) {
      if (!smooth_at(step)) continue;
      const double coarse = central(step);
      const double fine = central(step / 2);
      // Richardson extrapolation cancels the h^2 term of the central difference.
      numeric = (4 * fine - coarse) / 3;
      if (relative_error(coarse, fine) < 1e-3) break;
    }
    worst = std::max(worst, relative_error(grads.values[i], numeric));
  }
  return worst;
}

}  // namespace gtn::testing
