#include "hac/train/optim.hpp"

#include <cmath>
#include <numbers>

#include "hac/errors.hpp"

namespace hac::train {

OptimConfig OptimConfig::full_scale() { return OptimConfig{}; }

OptimConfig OptimConfig::desk_scale() {
  OptimConfig c;
  c.lr = 5e-3;
  c.iterations = 2000;
  c.pairs_per_side = 16;
  return c;
}

void OptimConfig::validate() const {
  if (!(lr > 0.0)) throw ValidationError("lr must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
  if (!(clip_norm > 0.0)) throw ValidationError("clip_norm must be positive");
  if (pairs_per_side < 1) throw ValidationError("pairs_per_side must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ValidationError("adam_eps must be positive");
}

void adam_step(std::span<ad::Tensor* const> params, std::span<const ad::Tensor> grads, AdamState& state,
               const OptimConfig& config, double lr_now) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) throw ShapeError("adam_step: gradient shape mismatch");
    if (!grads[i].all_finite()) throw NumericalError("adam_step: non-finite gradient");
  }
  if (state.first_moment.empty()) {
    for (const ad::Tensor* p : params) {
      state.first_moment.push_back(ad::Tensor::zeros(p->shape()));
      state.second_moment.push_back(ad::Tensor::zeros(p->shape()));
    }
  }
  if (state.first_moment.size() != params.size()) throw ShapeError("adam_step: state does not match parameters");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    const auto g = grads[i].values();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      theta[k] -= lr_now * (m_hat / (std::sqrt(v_hat) + config.adam_eps) + config.weight_decay * theta[k]);
    }
  }
}

double cosine_lr(std::size_t step, std::size_t total, double base_lr) {
  if (step > total) throw ValidationError("cosine_lr: step beyond the schedule");
  if (total == 0) return base_lr;
  const double progress = static_cast<double>(step) / static_cast<double>(total);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double global_norm(std::span<const ad::Tensor> grads) {
  double sq = 0.0;
  for (const ad::Tensor& g : grads) {
    for (double v : g.values()) sq += v * v;
  }
  return std::sqrt(sq);
}

double clip_gradients(std::span<ad::Tensor> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ValidationError("clip_gradients: max_norm must be positive");
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NumericalError("clip_gradients: non-finite gradient norm");
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (ad::Tensor& g : grads) {
      for (double& v : g.values()) v *= scale;
    }
  }
  return norm;
}

}  // namespace hac::train
