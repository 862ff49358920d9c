#pragma once

// The two optimization regimes: SGD + one-cycle for the CNN models,
// Adam + warmup/linear-decay for the attention baseline.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "longconv/tensor.hpp"

namespace longconv {

class OptimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// A non-finite gradient rejects the whole step before any state mutates.
template <typename S>
inline void check_grads_finite(std::vector<Tensor<S>>& params) {
  for (auto& p : params) {
    p.ensure_grad();
    const S* g = p.grad();
    for (std::int64_t i = 0; i < p.numel(); ++i)
      if (!std::isfinite(static_cast<double>(g[i])))
        throw OptimError("non-finite gradient; step rejected");
  }
}

}  // namespace detail

// v <- mu*v + g + wd*p;  p <- p - lr*v
template <typename S>
class Sgd {
 public:
  explicit Sgd(double momentum = 0.9, double weight_decay = 0.0)
      : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(std::vector<Tensor<S>>& params, double lr) {
    if (lr < 0.0) throw OptimError("sgd: negative learning rate");
    detail::check_grads_finite(params);
    if (velocity_.empty())
      for (auto& p : params)
        velocity_.emplace_back(static_cast<std::size_t>(p.numel()), S(0));
    if (velocity_.size() != params.size()) throw OptimError("sgd: parameter list changed");
    for (std::size_t j = 0; j < params.size(); ++j) {
      auto& p = params[j];
      auto& v = velocity_[j];
      if (v.size() != static_cast<std::size_t>(p.numel()))
        throw OptimError("sgd: shape mismatch with optimizer state");
      const S* g = p.grad();
      S* pd = p.data();
      const S mu = static_cast<S>(momentum_);
      const S wd = static_cast<S>(weight_decay_);
      const S eta = static_cast<S>(lr);
      for (std::int64_t i = 0; i < p.numel(); ++i) {
        v[static_cast<std::size_t>(i)] =
            mu * v[static_cast<std::size_t>(i)] + g[i] + wd * pd[i];
        pd[i] -= eta * v[static_cast<std::size_t>(i)];
      }
    }
  }

 private:
  double momentum_, weight_decay_;
  std::vector<TrackedVec<S>> velocity_;
};

// Bias-corrected Adam; weight decay enters as an L2 term in the gradient.
template <typename S>
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                double weight_decay = 0.01)
      : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

  void step(std::vector<Tensor<S>>& params, double lr) {
    if (lr < 0.0) throw OptimError("adam: negative learning rate");
    detail::check_grads_finite(params);
    if (m_.empty()) {
      for (auto& p : params) {
        m_.emplace_back(static_cast<std::size_t>(p.numel()), S(0));
        v_.emplace_back(static_cast<std::size_t>(p.numel()), S(0));
      }
    }
    if (m_.size() != params.size()) throw OptimError("adam: parameter list changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t j = 0; j < params.size(); ++j) {
      auto& p = params[j];
      if (m_[j].size() != static_cast<std::size_t>(p.numel()))
        throw OptimError("adam: shape mismatch with optimizer state");
      const S* g = p.grad();
      S* pd = p.data();
      for (std::int64_t i = 0; i < p.numel(); ++i) {
        const std::size_t is = static_cast<std::size_t>(i);
        const double gi = static_cast<double>(g[i]) + weight_decay_ * static_cast<double>(pd[i]);
        m_[j][is] = static_cast<S>(beta1_ * static_cast<double>(m_[j][is]) + (1.0 - beta1_) * gi);
        v_[j][is] =
            static_cast<S>(beta2_ * static_cast<double>(v_[j][is]) + (1.0 - beta2_) * gi * gi);
        const double mhat = static_cast<double>(m_[j][is]) / bc1;
        const double vhat = static_cast<double>(v_[j][is]) / bc2;
        pd[i] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  std::int64_t steps_taken() const { return t_; }

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  std::int64_t t_ = 0;
  std::vector<TrackedVec<S>> m_, v_;
};

// ---------------------------------------------------------------------------
// Learning-rate schedules
// ---------------------------------------------------------------------------

enum class ScheduleKind { one_cycle, warmup_linear };

struct ScheduleConfig {
  std::int64_t total_steps = 1;
  ScheduleKind kind = ScheduleKind::one_cycle;
  double max_lr = 0.01;
  double warmup_fraction = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;

  void validate() const {
    if (total_steps < 1) throw OptimError("schedule: total_steps must be >= 1");
    if (max_lr <= 0.0) throw OptimError("schedule: max_lr must be > 0");
    if (warmup_fraction <= 0.0 || warmup_fraction >= 1.0)
      throw OptimError("schedule: warmup_fraction must be in (0,1)");
    if (div_factor <= 0.0 || final_div_factor <= 0.0)
      throw OptimError("schedule: div factors must be > 0");
  }
};

namespace detail {
inline void check_step(std::int64_t step, const ScheduleConfig& cfg) {
  cfg.validate();
  if (step < 0 || step > cfg.total_steps)
    throw OptimError("schedule: step " + std::to_string(step) + " out of range [0," +
                     std::to_string(cfg.total_steps) + "]");
}
}  // namespace detail

// Cosine ramp max_lr/div -> max_lr at warmup_fraction*total, then cosine
// anneal to max_lr/final_div at total.
inline double one_cycle_lr(std::int64_t step, const ScheduleConfig& cfg) {
  detail::check_step(step, cfg);
  const double peak_step = cfg.warmup_fraction * static_cast<double>(cfg.total_steps);
  const double init_lr = cfg.max_lr / cfg.div_factor;
  const double final_lr = cfg.max_lr / cfg.final_div_factor;
  const double s = static_cast<double>(step);
  if (s <= peak_step) {
    const double phase = s / peak_step;
    return init_lr + (cfg.max_lr - init_lr) * 0.5 * (1.0 - std::cos(3.14159265358979323846 * phase));
  }
  const double phase = (s - peak_step) / (static_cast<double>(cfg.total_steps) - peak_step);
  return final_lr + (cfg.max_lr - final_lr) * 0.5 * (1.0 + std::cos(3.14159265358979323846 * phase));
}

// Linear 0 -> max_lr over the warmup fraction, then linear max_lr -> 0.
inline double warmup_linear_lr(std::int64_t step, const ScheduleConfig& cfg) {
  detail::check_step(step, cfg);
  const double w = cfg.warmup_fraction * static_cast<double>(cfg.total_steps);
  const double s = static_cast<double>(step);
  if (s <= w) return cfg.max_lr * s / w;
  return cfg.max_lr * (static_cast<double>(cfg.total_steps) - s) /
         (static_cast<double>(cfg.total_steps) - w);
}

inline double schedule_lr(std::int64_t step, const ScheduleConfig& cfg) {
  return cfg.kind == ScheduleKind::one_cycle ? one_cycle_lr(step, cfg)
                                             : warmup_linear_lr(step, cfg);
}

}  // namespace longconv
