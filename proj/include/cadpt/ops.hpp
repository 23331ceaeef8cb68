// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives over rank-2 tensors. Broadcasting is limited to
// adding a 1 x n bias row to an m x n matrix.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cadpt/tensor.hpp"

namespace cadpt {

inline constexpr std::int64_t kIgnoreIndex = -100;

namespace detail {

template <class T>
T* grad_target(const ImplPtr<T>& in) {
  if (!in->requires_grad) return nullptr;
  in->ensure_grad();
  return in->grad.data();
}

template <class T>
void require_matrix(const BasicTensor<T>& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + " expects a matrix, got " + shape_str(t.shape()));
  }
}

template <class T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  }
}

// C = A(m x k) * B(k x n), accumulated in double so that summation order
// across k never changes the rounded float result in practice.
template <class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  std::vector<Accum<T>> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Accum<T> av = static_cast<Accum<T>>(arow[p]);
      if (av == 0.0) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) acc[j] += av * static_cast<Accum<T>>(brow[j]);
    }
    T* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = static_cast<T>(acc[j]);
  }
}

}  // namespace detail

/// Matrix product a(m x k) * b(k x n).
template <class T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions differ for " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  std::vector<T> out(m * n);
  detail::gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result<T>({m, n}, std::move(out), {a, b}, "matmul",
                        [m, k, n](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          const T* go = o.grad.data();
                          const T* av = in[0]->data.data();
                          const T* bv = in[1]->data.data();
                          if (T* ga = detail::grad_target(in[0])) {
                            // ga += go * b^T
                            for (std::size_t i = 0; i < m; ++i) {
                              const T* gr = go + i * n;
                              for (std::size_t p = 0; p < k; ++p) {
                                const T* br = bv + p * n;
                                T s{0};
                                for (std::size_t j = 0; j < n; ++j) s += gr[j] * br[j];
                                ga[i * k + p] += s;
                              }
                            }
                          }
                          if (T* gb = detail::grad_target(in[1])) {
                            // gb += a^T * go
                            for (std::size_t i = 0; i < m; ++i) {
                              const T* gr = go + i * n;
                              for (std::size_t p = 0; p < k; ++p) {
                                const T s = av[i * k + p];
                                if (s == T{0}) continue;
                                T* gbr = gb + p * n;
                                for (std::size_t j = 0; j < n; ++j) gbr[j] += s * gr[j];
                              }
                            }
                          }
                        });
}

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, "add",
                        [](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          for (int s = 0; s < 2; ++s) {
                            if (T* g = detail::grad_target(in[s])) {
                              for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
                            }
                          }
                        });
}

template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, "sub",
                        [](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
                          }
                          if (T* g = detail::grad_target(in[1])) {
                            for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] -= o.grad[i];
                          }
                        });
}

/// Elementwise (Hadamard) product.
template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, "mul",
                        [](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * in[1]->data[i];
                          }
                          if (T* g = detail::grad_target(in[1])) {
                            for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * in[0]->data[i];
                          }
                        });
}

template <class T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor;
  return make_result<T>(x.shape(), std::move(out), {x}, "scale",
                        [factor](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * factor;
                          }
                        });
}

/// x(m x n) + bias(1 x n), bias broadcast over rows.
template <class T>
BasicTensor<T> add_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
  detail::require_matrix(x, "add_bias");
  const std::size_t m = x.rows(), n = x.cols();
  if (bias.size() != n || bias.rows() != 1) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not match " + shape_str(x.shape()));
  }
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.data()[i * n + j] + bias.data()[j];
  return make_result<T>(x.shape(), std::move(out), {x, bias}, "add_bias",
                        [m, n](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < m * n; ++i) g[i] += o.grad[i];
                          }
                          if (T* g = detail::grad_target(in[1])) {
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j) g[j] += o.grad[i * n + j];
                          }
                        });
}

template <class T>
BasicTensor<T> transpose(const BasicTensor<T>& x) {
  detail::require_matrix(x, "transpose");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x.data()[i * n + j];
  return make_result<T>({n, m}, std::move(out), {x}, "transpose",
                        [m, n](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j) g[i * n + j] += o.grad[j * m + i];
                          }
                        });
}

/// Stacks matrices with equal column counts vertically.
template <class T>
BasicTensor<T> concat_rows(const std::vector<BasicTensor<T>>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    detail::require_matrix(p, "concat_rows");
    if (p.cols() != n) {
      throw ShapeError("concat_rows: column mismatch " + shape_str(parts.front().shape()) + " vs " +
                       shape_str(p.shape()));
    }
    m += p.rows();
  }
  std::vector<T> out;
  out.reserve(m * n);
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    out.insert(out.end(), p.data().begin(), p.data().end());
    sizes.push_back(p.size());
  }
  return make_result<T>({m, n}, std::move(out), parts, "concat_rows",
                        [sizes](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          std::size_t off = 0;
                          for (std::size_t s = 0; s < in.size(); ++s) {
                            if (T* g = detail::grad_target(in[s])) {
                              for (std::size_t i = 0; i < sizes[s]; ++i) g[i] += o.grad[off + i];
                            }
                            off += sizes[s];
                          }
                        });
}

/// Places matrices with equal row counts side by side.
template <class T>
BasicTensor<T> concat_cols(const std::vector<BasicTensor<T>>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    detail::require_matrix(p, "concat_cols");
    if (p.rows() != m) {
      throw ShapeError("concat_cols: row mismatch " + shape_str(parts.front().shape()) + " vs " +
                       shape_str(p.shape()));
    }
    widths.push_back(p.cols());
    n += p.cols();
  }
  std::vector<T> out(m * n);
  std::size_t col = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * n + col + j] = p.data()[i * w + j];
    col += w;
  }
  return make_result<T>({m, n}, std::move(out), parts, "concat_cols",
                        [widths, m, n](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          std::size_t c = 0;
                          for (std::size_t s = 0; s < in.size(); ++s) {
                            const std::size_t w = widths[s];
                            if (T* g = detail::grad_target(in[s])) {
                              for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < w; ++j) g[i * w + j] += o.grad[i * n + c + j];
                            }
                            c += w;
                          }
                        });
}

template <class T>
BasicTensor<T> slice_cols(const BasicTensor<T>& x, std::size_t start, std::size_t width) {
  detail::require_matrix(x, "slice_cols");
  const std::size_t m = x.rows(), n = x.cols();
  if (width == 0 || start + width > n) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(width) +
                     ") out of range for " + shape_str(x.shape()));
  }
  std::vector<T> out(m * width);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < width; ++j) out[i * width + j] = x.data()[i * n + start + j];
  return make_result<T>({m, width}, std::move(out), {x}, "slice_cols",
                        [m, n, start, width](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < width; ++j) g[i * n + start + j] += o.grad[i * width + j];
                          }
                        });
}

template <class T>
BasicTensor<T> slice_rows(const BasicTensor<T>& x, std::size_t start, std::size_t count) {
  detail::require_matrix(x, "slice_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (count == 0 || start + count > m) {
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) +
                     ") out of range for " + shape_str(x.shape()));
  }
  std::vector<T> out(x.data().begin() + start * n, x.data().begin() + (start + count) * n);
  return make_result<T>({count, n}, std::move(out), {x}, "slice_rows",
                        [n, start](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < o.grad.size(); ++i) g[start * n + i] += o.grad[i];
                          }
                        });
}

/// Gathers rows of table by index; the backward pass scatter-adds.
template <class T>
BasicTensor<T> embedding(const BasicTensor<T>& table, const std::vector<std::int64_t>& ids) {
  detail::require_matrix(table, "embedding");
  if (ids.empty()) throw ContractError("embedding: empty index list");
  const std::size_t v = table.rows(), d = table.cols();
  std::vector<T> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      throw ShapeError("embedding: index " + std::to_string(ids[i]) + " outside table " +
                       shape_str(table.shape()));
    }
    std::copy_n(table.data().begin() + ids[i] * d, d, out.begin() + i * d);
  }
  return make_result<T>({ids.size(), d}, std::move(out), {table}, "embedding",
                        [ids, d](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < ids.size(); ++i)
                              for (std::size_t j = 0; j < d; ++j) g[ids[i] * d + j] += o.grad[i * d + j];
                          }
                        });
}

template <class T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
  Accum<T> s = 0.0;
  for (T v : x.data()) s += v;
  return make_result<T>({1, 1}, {static_cast<T>(s)}, {x}, "sum",
                        [](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < in[0]->data.size(); ++i) g[i] += o.grad[0];
                          }
                        });
}

template <class T>
BasicTensor<T> mean(const BasicTensor<T>& x) {
  const T inv = T{1} / static_cast<T>(x.size());
  Accum<T> s = 0.0;
  for (T v : x.data()) s += v;
  return make_result<T>({1, 1}, {static_cast<T>(s) * inv}, {x}, "mean",
                        [inv](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < in[0]->data.size(); ++i) g[i] += o.grad[0] * inv;
                          }
                        });
}

/// Column means over rows: m x n -> 1 x n.
template <class T>
BasicTensor<T> mean_rows(const BasicTensor<T>& x) {
  detail::require_matrix(x, "mean_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<Accum<T>> acc(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) acc[j] += x.data()[i * n + j];
  std::vector<T> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<T>(acc[j] / static_cast<Accum<T>>(m));
  return make_result<T>({1, n}, std::move(out), {x}, "mean_rows",
                        [m, n](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            const T inv = T{1} / static_cast<T>(m);
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j) g[i * n + j] += o.grad[j] * inv;
                          }
                        });
}

/// max(0, x); the subgradient at exactly zero is zero.
template <class T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] > T{0} ? x.data()[i] : T{0};
  return make_result<T>(x.shape(), std::move(out), {x}, "relu",
                        [](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < o.grad.size(); ++i)
                              if (in[0]->data[i] > T{0}) g[i] += o.grad[i];
                          }
                        });
}

namespace detail {

// Row softmax over the first `valid(i)` columns of each row; the rest are
// exactly zero. Max-subtracted, sums taken in double.
template <class T, class Valid>
BasicTensor<T> softmax_rows_impl(const BasicTensor<T>& x, Valid valid, const char* op) {
  detail::require_matrix(x, op);
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<T> out(m * n, T{0});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t w = valid(i);
    const T* row = x.data().data() + i * n;
    T mx = row[0];
    for (std::size_t j = 1; j < w; ++j) mx = std::max(mx, row[j]);
    Accum<T> z = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      z += out[i * n + j];
    }
    for (std::size_t j = 0; j < w; ++j) out[i * n + j] = static_cast<T>(out[i * n + j] / z);
  }
  return make_result<T>({m, n}, std::move(out), {x}, op, [m, n](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
    if (T* g = detail::grad_target(in[0])) {
      // dx = y * (dy - <dy, y>)
      for (std::size_t i = 0; i < m; ++i) {
        const T* y = o.data.data() + i * n;
        const T* gy = o.grad.data() + i * n;
        Accum<T> dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += static_cast<Accum<T>>(gy[j]) * y[j];
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (gy[j] - static_cast<T>(dot));
      }
    }
  });
}

}  // namespace detail

template <class T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& x) {
  const std::size_t n = x.cols();
  return detail::softmax_rows_impl(x, [n](std::size_t) { return n; }, "softmax_rows");
}

/// Softmax where row i only sees columns 0..i (lower-triangular attention mask).
template <class T>
BasicTensor<T> causal_softmax_rows(const BasicTensor<T>& x) {
  const std::size_t n = x.cols();
  return detail::softmax_rows_impl(x, [n](std::size_t i) { return std::min(i + 1, n); }, "causal_softmax_rows");
}

/// Per-row layer normalization with learned gain and bias (both 1 x n).
template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                          T eps = T(1e-5)) {
  detail::require_matrix(x, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.size() != n || beta.size() != n) {
    throw ShapeError("layer_norm: gain/bias " + shape_str(gamma.shape()) + " do not match " + shape_str(x.shape()));
  }
  std::vector<T> out(m * n), xhat(m * n), inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = x.data().data() + i * n;
    Accum<T> mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<Accum<T>>(n);
    Accum<T> var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<Accum<T>>(n);
    inv_std[i] = static_cast<T>(1.0 / std::sqrt(var + static_cast<Accum<T>>(eps)));
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = static_cast<T>((row[j] - mu) * inv_std[i]);
      out[i * n + j] = xhat[i * n + j] * gamma.data()[j] + beta.data()[j];
    }
  }
  return make_result<T>(
      {m, n}, std::move(out), {x, gamma, beta}, "layer_norm",
      [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
        const T* gy = o.grad.data();
        const T* gam = in[1]->data.data();
        if (T* g = detail::grad_target(in[0])) {
          for (std::size_t i = 0; i < m; ++i) {
            Accum<T> mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const Accum<T> d = static_cast<Accum<T>>(gy[i * n + j]) * gam[j];
              mean_d += d;
              mean_dx += d * xhat[i * n + j];
            }
            mean_d /= static_cast<Accum<T>>(n);
            mean_dx /= static_cast<Accum<T>>(n);
            for (std::size_t j = 0; j < n; ++j) {
              const Accum<T> d = static_cast<Accum<T>>(gy[i * n + j]) * gam[j];
              g[i * n + j] += static_cast<T>(inv_std[i] * (d - mean_d - xhat[i * n + j] * mean_dx));
            }
          }
        }
        if (T* g = detail::grad_target(in[1])) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) g[j] += gy[i * n + j] * xhat[i * n + j];
        }
        if (T* g = detail::grad_target(in[2])) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) g[j] += gy[i * n + j];
        }
      });
}

/// Scales each row to unit Euclidean norm. Rows with norm below min_norm are an error.
template <class T>
BasicTensor<T> l2_normalize_rows(const BasicTensor<T>& x, T min_norm = T(1e-12)) {
  detail::require_matrix(x, "l2_normalize_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<T> out(m * n), norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    Accum<T> s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += static_cast<Accum<T>>(x.data()[i * n + j]) * x.data()[i * n + j];
    const Accum<T> nrm = std::sqrt(s);
    if (!(nrm > static_cast<Accum<T>>(min_norm))) {
      throw NumericError("l2_normalize_rows: row " + std::to_string(i) + " has zero norm");
    }
    norms[i] = static_cast<T>(nrm);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = static_cast<T>(x.data()[i * n + j] / nrm);
  }
  return make_result<T>({m, n}, std::move(out), {x}, "l2_normalize_rows",
                        [m, n, norms = std::move(norms)](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            for (std::size_t i = 0; i < m; ++i) {
                              const T* y = o.data.data() + i * n;
                              const T* gy = o.grad.data() + i * n;
                              Accum<T> dot = 0.0;
                              for (std::size_t j = 0; j < n; ++j) dot += static_cast<Accum<T>>(gy[j]) * y[j];
                              for (std::size_t j = 0; j < n; ++j)
                                g[i * n + j] += (gy[j] - y[j] * static_cast<T>(dot)) / norms[i];
                            }
                          }
                        });
}

/// Mean softmax cross-entropy over rows whose target is not kIgnoreIndex.
template <class T>
BasicTensor<T> cross_entropy_logits(const BasicTensor<T>& logits, const std::vector<std::int64_t>& targets) {
  detail::require_matrix(logits, "cross_entropy_logits");
  const std::size_t m = logits.rows(), n = logits.cols();
  if (targets.size() != m) {
    throw ShapeError("cross_entropy_logits: " + std::to_string(targets.size()) + " targets for logits " +
                     shape_str(logits.shape()));
  }
  std::size_t count = 0;
  for (auto t : targets) {
    if (t == kIgnoreIndex) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= n) {
      throw ShapeError("cross_entropy_logits: target " + std::to_string(t) + " outside " + std::to_string(n) +
                       " classes");
    }
    ++count;
  }
  if (count == 0) throw ContractError("cross_entropy_logits: every target is ignored");
  std::vector<T> probs(m * n, T{0});
  Accum<T> total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] == kIgnoreIndex) continue;
    const T* row = logits.data().data() + i * n;
    const T mx = *std::max_element(row, row + n);
    Accum<T> z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(static_cast<Accum<T>>(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) probs[i * n + j] = static_cast<T>(std::exp(static_cast<Accum<T>>(row[j] - mx)) / z);
    total += std::log(z) + mx - row[targets[i]];
  }
  const T inv = T{1} / static_cast<T>(count);
  return make_result<T>({1, 1}, {static_cast<T>(total / static_cast<Accum<T>>(count))}, {logits}, "cross_entropy_logits",
                        [m, n, inv, targets, probs = std::move(probs)](TensorImpl<T>& o, std::span<const ImplPtr<T>> in) {
                          if (T* g = detail::grad_target(in[0])) {
                            const T go = o.grad[0] * inv;
                            for (std::size_t i = 0; i < m; ++i) {
                              if (targets[i] == kIgnoreIndex) continue;
                              for (std::size_t j = 0; j < n; ++j) g[i * n + j] += go * probs[i * n + j];
                              g[i * n + targets[i]] -= go;
                            }
                          }
                        });
}

/// Affine map x * weight + bias with weight stored (in x out).
template <class T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
  return add_bias(matmul(x, weight), bias);
}

}  // namespace cadpt
