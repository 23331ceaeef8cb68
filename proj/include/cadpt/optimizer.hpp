// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cadpt/params.hpp"
#include "cadpt/tensor.hpp"

namespace cadpt {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

/// Adam with bias correction. Moment buffers exist only for the parameters
/// handed to the constructor, so anything else is never touched.
template <class T>
class Adam {
 public:
  Adam(ParamList<T> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.emplace_back(p.tensor.size(), 0.0);
      v_.emplace_back(p.tensor.size(), 0.0);
    }
  }

  /// Applies one update from the accumulated gradients. Parameters without a
  /// gradient buffer are treated as having a zero gradient.
  void step() {
    for (const auto& p : params_) {
      for (T g : p.tensor.grad()) {
        if (!std::isfinite(static_cast<double>(g))) {
          throw NumericError("non-finite gradient in parameter '" + p.name + "'");
        }
      }
    }
    double clip = 1.0;
    if (cfg_.clip_norm > 0) {
      double sq = 0.0;
      for (const auto& p : params_)
        for (T g : p.tensor.grad()) sq += static_cast<double>(g) * g;
      const double norm = std::sqrt(sq);
      if (norm > cfg_.clip_norm) clip = cfg_.clip_norm / norm;
    }
    ++steps_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& t = params_[k].tensor;
      auto data = t.data();
      auto grad = t.grad();
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double g = grad.empty() ? 0.0 : static_cast<double>(grad[i]) * clip;
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double update = cfg_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
        data[i] = static_cast<T>(static_cast<double>(data[i]) - update);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  std::size_t step_count() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }
  const ParamList<T>& parameters() const { return params_; }
  const std::vector<double>& first_moment(std::size_t k) const { return m_[k]; }
  const std::vector<double>& second_moment(std::size_t k) const { return v_[k]; }

 private:
  ParamList<T> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t steps_ = 0;
};

}  // namespace cadpt
