// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "cadpt/tensor.hpp"

namespace cadpt {

/// Largest relative disagreement between the analytic gradient of f at x and
/// a central finite difference with the given step:
///   max_i |analytic_i - numeric_i| / (|analytic_i| + |numeric_i| + 1e-8).
///
/// f is either a function of x or a nullary closure that reads x through a
/// shared handle; x is perturbed in place and restored afterwards.
template <class T, class F>
double finite_difference_check(F&& f, BasicTensor<T> x, double step) {
  if (!(step > 0.0)) throw ContractError("finite_difference_check: step must be positive");
  auto eval = [&]() -> BasicTensor<T> {
    if constexpr (std::is_invocable_v<F&, BasicTensor<T>>) {
      return f(x);
    } else {
      return f();
    }
  };
  const bool had = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();
  {
    auto y = eval();
    backward(y);
  }
  std::vector<T> analytic(x.size(), T{0});
  if (x.has_grad()) analytic.assign(x.grad().begin(), x.grad().end());
  double worst = 0.0;
  {
    NoGradGuard guard;
    auto data = x.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const T orig = data[i];
      data[i] = static_cast<T>(orig + step);
      const Accum<T> up = eval().item();
      data[i] = static_cast<T>(orig - step);
      const Accum<T> down = eval().item();
      data[i] = orig;
      const Accum<T> numeric = (up - down) / (2 * static_cast<Accum<T>>(step));
      const Accum<T> a = analytic[i];
      const Accum<T> rel = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + Accum<T>(1e-8));
      worst = std::max(worst, static_cast<double>(rel));
    }
  }
  x.zero_grad();
  x.set_requires_grad(had);
  return worst;
}

}  // namespace cadpt
