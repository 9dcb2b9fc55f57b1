#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hac/ad/tensor.hpp"

namespace hac::train {

struct OptimConfig {
  double lr = 5e-5;
  double weight_decay = 1e-5;
  std::size_t iterations = 15000;
  double clip_norm = 1.0;
  std::size_t pairs_per_side = 160;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  /// The large-scale recipe: Adam at 5e-5, weight decay 1e-5, cosine decay over
  /// 15000 iterations, clipping at 1.0, 160 + 160 pairs per batch.
  static OptimConfig full_scale();
  /// Budget small enough for a single CPU core.
  static OptimConfig desk_scale();

  void validate() const;
};

struct AdamState {
  std::vector<ad::Tensor> first_moment;
  std::vector<ad::Tensor> second_moment;
  std::size_t step = 0;
};

/// Bias-corrected Adam with decoupled weight decay:
///   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
/// Throws NumericalError on a non-finite gradient without touching the
/// parameters or state.
void adam_step(std::span<ad::Tensor* const> params, std::span<const ad::Tensor> grads, AdamState& state,
               const OptimConfig& config, double lr_now);

/// base_lr * (1 + cos(pi * step / total)) / 2
double cosine_lr(std::size_t step, std::size_t total, double base_lr);

/// Rescales every gradient by max_norm / g when the global L2 norm g exceeds
/// max_norm. Returns g.
double clip_gradients(std::span<ad::Tensor> grads, double max_norm);

double global_norm(std::span<const ad::Tensor> grads);

}  // namespace hac::train
