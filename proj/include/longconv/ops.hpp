#pragma once

// Differentiable primitives. Every op validates shapes, computes forward via
// Eigen maps over the flat buffers, and records one backward rule on the
// active tape when any input carries gradient.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "longconv/rng.hpp"
#include "longconv/tensor.hpp"

namespace longconv {

struct Pad {
  std::int64_t left = 0;
  std::int64_t right = 0;
};

namespace detail {

template <typename S>
inline bool recording(bool any_input_grad) {
  return active_tape<S>() != nullptr && any_input_grad;
}

template <typename S>
inline void record(Tensor<S>& out, typename Tape<S>::BackwardFn fn) {
  out.set_requires_grad(true);
  active_tape<S>()->record(out, std::move(fn));
}

inline void require(bool cond, const char* op, const std::string& msg) {
  if (!cond) throw TensorError(std::string(op) + ": " + msg);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Embedding lookup: table [V,E], ids length T -> [E,T]
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> embed(const Tensor<S>& table, const std::vector<int>& ids) {
  detail::require(table.rank() == 2, "embed", "table must be rank 2 [V,E]");
  const std::int64_t v = table.dim(0), e = table.dim(1);
  const std::int64_t t_len = static_cast<std::int64_t>(ids.size());
  for (std::int64_t t = 0; t < t_len; ++t) {
    if (ids[t] < 0 || ids[t] >= v)
      throw TensorError("embed: out-of-vocabulary id " + std::to_string(ids[t]) +
                        " at position " + std::to_string(t) + " (vocab " + std::to_string(v) +
                        ")");
  }
  Tensor<S> y = Tensor<S>::zeros({e, t_len});
  for (std::int64_t t = 0; t < t_len; ++t) {
    const S* row = table.data() + ids[t] * e;
    S* out = y.data();
    for (std::int64_t i = 0; i < e; ++i) out[i * t_len + t] = row[i];
  }
  if (detail::recording<S>(table.requires_grad())) {
    detail::record(y, [table, y, ids, v, e, t_len]() mutable {
      Tensor<S> tb = table;
      const S* gy = y.grad();
      S* gt = tb.grad();
      for (std::int64_t t = 0; t < t_len; ++t) {
        S* row = gt + ids[t] * e;
        for (std::int64_t i = 0; i < e; ++i) row[i] += gy[i * t_len + t];
      }
      (void)v;
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Dilated 1-D convolution: x [C_in,T], w [C_out,C_in,k], b [C_out]
// Zero padding (left,right); T_out = T + left + right - (k-1)*dilation.
// im2col + GEMM; the column matrix is kept for the backward pass.
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> conv1d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b,
                 std::int64_t dilation, Pad pad) {
  detail::require(x.rank() == 2, "conv1d", "input must be rank 2 [C_in,T]");
  detail::require(w.rank() == 3, "conv1d", "weight must be rank 3 [C_out,C_in,k]");
  detail::require(b.rank() == 1, "conv1d", "bias must be rank 1 [C_out]");
  const std::int64_t c_in = x.dim(0), t_in = x.dim(1);
  const std::int64_t c_out = w.dim(0), k = w.dim(2);
  detail::require(w.dim(1) == c_in, "conv1d",
                  "weight expects " + std::to_string(w.dim(1)) + " input channels, got " +
                      std::to_string(c_in));
  detail::require(b.dim(0) == c_out, "conv1d", "bias length must equal C_out");
  detail::require(k >= 1, "conv1d", "kernel size must be >= 1");
  detail::require(dilation >= 1, "conv1d", "dilation must be >= 1");
  detail::require(pad.left >= 0 && pad.right >= 0, "conv1d", "negative pad");
  const std::int64_t span = (k - 1) * dilation + 1;
  detail::require(t_in + pad.left + pad.right >= span, "conv1d",
                  "padded length shorter than kernel span");
  const std::int64_t t_out = t_in + pad.left + pad.right - (k - 1) * dilation;

  // im2col: cols[(i*k+j), t] = x[i, t - left + j*dilation], zero out of range.
  auto cols = std::make_shared<TrackedVec<S>>(static_cast<std::size_t>(c_in * k * t_out), S(0));
  for (std::int64_t i = 0; i < c_in; ++i) {
    const S* xin = x.data() + i * t_in;
    for (std::int64_t j = 0; j < k; ++j) {
      S* dst = cols->data() + (i * k + j) * t_out;
      const std::int64_t shift = j * dilation - pad.left;  // src = t + shift
      const std::int64_t t0 = std::max<std::int64_t>(0, -shift);
      const std::int64_t t1 = std::min<std::int64_t>(t_out, t_in - shift);
      for (std::int64_t t = t0; t < t1; ++t) dst[t] = xin[t + shift];
    }
  }

  Tensor<S> y = Tensor<S>::zeros({c_out, t_out});
  {
    ConstMatMap<S> cm(cols->data(), c_in * k, t_out);
    auto ym = y.mat(c_out, t_out);
    ym.noalias() = w.mat(c_out, c_in * k) * cm;
    ym.colwise() += b.vec();
  }

  if (detail::recording<S>(x.requires_grad() || w.requires_grad() || b.requires_grad())) {
    detail::record(y, [x, w, b, y, cols, dilation, pad, c_in, c_out, k, t_in, t_out]() mutable {
      Tensor<S> xc = x, wc = w, bc = b;
      auto gy = y.grad_mat(c_out, t_out);
      if (wc.requires_grad()) {
        ConstMatMap<S> cm(cols->data(), c_in * k, t_out);
        wc.grad_mat(c_out, c_in * k).noalias() += gy * cm.transpose();
      }
      if (bc.requires_grad()) bc.grad_vec() += gy.rowwise().sum();
      if (xc.requires_grad()) {
        TrackedVec<S> dcols(static_cast<std::size_t>(c_in * k * t_out));
        MatMap<S> dcm(dcols.data(), c_in * k, t_out);
        dcm.noalias() = wc.mat(c_out, c_in * k).transpose() * gy;
        S* gx = xc.grad();
        for (std::int64_t i = 0; i < c_in; ++i) {
          S* gxi = gx + i * t_in;
          for (std::int64_t j = 0; j < k; ++j) {
            const S* src = dcols.data() + (i * k + j) * t_out;
            const std::int64_t shift = j * dilation - pad.left;
            const std::int64_t t0 = std::max<std::int64_t>(0, -shift);
            const std::int64_t t1 = std::min<std::int64_t>(t_out, t_in - shift);
            for (std::int64_t t = t0; t < t1; ++t) gxi[t + shift] += src[t];
          }
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Affine map over the last dimension: x [D_in] or [N,D_in], w [D_out,D_in]
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  detail::require(w.rank() == 2, "linear", "weight must be rank 2 [D_out,D_in]");
  detail::require(b.rank() == 1 && b.dim(0) == w.dim(0), "linear",
                  "bias length must equal D_out");
  detail::require(x.rank() == 1 || x.rank() == 2, "linear", "input must be rank 1 or 2");
  const std::int64_t d_out = w.dim(0), d_in = w.dim(1);
  const std::int64_t last = x.dim(x.rank() - 1);
  detail::require(last == d_in, "linear",
                  "dimension mismatch: input " + std::to_string(last) + " vs weight " +
                      std::to_string(d_in));

  Tensor<S> y;
  if (x.rank() == 1) {
    y = Tensor<S>::zeros({d_out});
    y.vec().noalias() = w.mat(d_out, d_in) * x.vec();
    y.vec() += b.vec();
  } else {
    const std::int64_t n = x.dim(0);
    y = Tensor<S>::zeros({n, d_out});
    auto ym = y.mat(n, d_out);
    ym.noalias() = x.mat(n, d_in) * w.mat(d_out, d_in).transpose();
    ym.rowwise() += b.vec().transpose();
  }

  if (detail::recording<S>(x.requires_grad() || w.requires_grad() || b.requires_grad())) {
    detail::record(y, [x, w, b, y, d_out, d_in]() mutable {
      Tensor<S> xc = x, wc = w, bc = b;
      if (xc.rank() == 1) {
        auto gy = y.grad_vec();
        if (xc.requires_grad())
          xc.grad_vec().noalias() += wc.mat(d_out, d_in).transpose() * gy;
        if (wc.requires_grad()) wc.grad_mat(d_out, d_in).noalias() += gy * xc.vec().transpose();
        if (bc.requires_grad()) bc.grad_vec() += gy;
      } else {
        const std::int64_t n = xc.dim(0);
        auto gy = y.grad_mat(n, d_out);
        if (xc.requires_grad()) xc.grad_mat(n, d_in).noalias() += gy * wc.mat(d_out, d_in);
        if (wc.requires_grad())
          wc.grad_mat(d_out, d_in).noalias() += gy.transpose() * xc.mat(n, d_in);
        if (bc.requires_grad()) bc.grad_vec() += gy.colwise().sum().transpose();
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
  Tensor<S> y = Tensor<S>::zeros(x.shape());
  const S* xd = x.data();
  S* yd = y.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) yd[i] = xd[i] > S(0) ? xd[i] : S(0);
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y]() mutable {
      Tensor<S> xc = x;
      const S* gy = y.grad();
      const S* xd = xc.data();
      S* gx = xc.grad();
      for (std::int64_t i = 0; i < xc.numel(); ++i)
        if (xd[i] > S(0)) gx[i] += gy[i];
    });
  }
  return y;
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  Tensor<S> y = Tensor<S>::zeros(x.shape());
  const S* xd = x.data();
  S* yd = y.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    S z = xd[i];
    yd[i] = z >= S(0) ? S(1) / (S(1) + std::exp(-z))
                      : S(1) - S(1) / (S(1) + std::exp(z));
  }
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y]() mutable {
      Tensor<S> xc = x;
      const S* gy = y.grad();
      const S* yd = y.data();
      S* gx = xc.grad();
      for (std::int64_t i = 0; i < xc.numel(); ++i) gx[i] += gy[i] * yd[i] * (S(1) - yd[i]);
    });
  }
  return y;
}

// Inverted dropout: identity at eval, scale by 1/(1-p) on kept units at train.
template <typename S>
Tensor<S> dropout(const Tensor<S>& x, double p, bool train, Rng& rng) {
  detail::require(p >= 0.0 && p < 1.0, "dropout", "p must be in [0,1)");
  if (!train || p == 0.0) return x;
  auto keep = std::make_shared<TrackedVec<S>>(static_cast<std::size_t>(x.numel()));
  const S scale = static_cast<S>(1.0 / (1.0 - p));
  for (std::int64_t i = 0; i < x.numel(); ++i)
    (*keep)[static_cast<std::size_t>(i)] = rng.uniform() >= p ? scale : S(0);
  Tensor<S> y = Tensor<S>::zeros(x.shape());
  const S* xd = x.data();
  S* yd = y.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) yd[i] = xd[i] * (*keep)[i];
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y, keep]() mutable {
      Tensor<S> xc = x;
      const S* gy = y.grad();
      S* gx = xc.grad();
      for (std::int64_t i = 0; i < xc.numel(); ++i) gx[i] += gy[i] * (*keep)[i];
    });
  }
  return y;
}

namespace detail {

template <typename S, typename Fwd, typename Bwd>
Tensor<S> binary_elementwise(const char* op, const Tensor<S>& a, const Tensor<S>& b, Fwd fwd,
                             Bwd bwd) {
  detail::require(a.shape() == b.shape(), op, "shape mismatch " + shape_str(a.shape()) +
                                                  " vs " + shape_str(b.shape()));
  Tensor<S> y = Tensor<S>::zeros(a.shape());
  const S* ad = a.data();
  const S* bd = b.data();
  S* yd = y.data();
  for (std::int64_t i = 0; i < y.numel(); ++i) yd[i] = fwd(ad[i], bd[i]);
  if (detail::recording<S>(a.requires_grad() || b.requires_grad())) {
    detail::record(y, [a, b, y, bwd]() mutable {
      Tensor<S> ac = a, bc = b;
      const S* gy = y.grad();
      bwd(ac, bc, gy);
    });
  }
  return y;
}

}  // namespace detail

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_elementwise<S>(
      "add", a, b, [](S x, S z) { return x + z; },
      [](Tensor<S>& ac, Tensor<S>& bc, const S* gy) {
        if (ac.requires_grad()) {
          S* ga = ac.grad();
          for (std::int64_t i = 0; i < ac.numel(); ++i) ga[i] += gy[i];
        }
        if (bc.requires_grad()) {
          S* gb = bc.grad();
          for (std::int64_t i = 0; i < bc.numel(); ++i) gb[i] += gy[i];
        }
      });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_elementwise<S>(
      "sub", a, b, [](S x, S z) { return x - z; },
      [](Tensor<S>& ac, Tensor<S>& bc, const S* gy) {
        if (ac.requires_grad()) {
          S* ga = ac.grad();
          for (std::int64_t i = 0; i < ac.numel(); ++i) ga[i] += gy[i];
        }
        if (bc.requires_grad()) {
          S* gb = bc.grad();
          for (std::int64_t i = 0; i < bc.numel(); ++i) gb[i] -= gy[i];
        }
      });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_elementwise<S>(
      "mul", a, b, [](S x, S z) { return x * z; },
      [](Tensor<S>& ac, Tensor<S>& bc, const S* gy) {
        const S* ad = ac.data();
        const S* bd = bc.data();
        if (ac.requires_grad()) {
          S* ga = ac.grad();
          for (std::int64_t i = 0; i < ac.numel(); ++i) ga[i] += gy[i] * bd[i];
        }
        if (bc.requires_grad()) {
          S* gb = bc.grad();
          for (std::int64_t i = 0; i < bc.numel(); ++i) gb[i] += gy[i] * ad[i];
        }
      });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& x, double c) {
  Tensor<S> y = Tensor<S>::zeros(x.shape());
  const S cs = static_cast<S>(c);
  const S* xd = x.data();
  S* yd = y.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) yd[i] = xd[i] * cs;
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y, cs]() mutable {
      Tensor<S> xc = x;
      const S* gy = y.grad();
      S* gx = xc.grad();
      for (std::int64_t i = 0; i < xc.numel(); ++i) gx[i] += gy[i] * cs;
    });
  }
  return y;
}

// |x|; subgradient 0 at x == 0.
template <typename S>
Tensor<S> absolute(const Tensor<S>& x) {
  Tensor<S> y = Tensor<S>::zeros(x.shape());
  const S* xd = x.data();
  S* yd = y.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) yd[i] = std::abs(xd[i]);
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y]() mutable {
      Tensor<S> xc = x;
      const S* gy = y.grad();
      const S* xd = xc.data();
      S* gx = xc.grad();
      for (std::int64_t i = 0; i < xc.numel(); ++i) {
        if (xd[i] > S(0)) gx[i] += gy[i];
        else if (xd[i] < S(0)) gx[i] -= gy[i];
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Concatenation along axis 0 (rank 1/2) or axis 1 (rank 2)
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& xs, int axis = 0) {
  detail::require(!xs.empty(), "concat", "empty input list");
  const std::int64_t rank = xs[0].rank();
  detail::require((axis == 0 && (rank == 1 || rank == 2)) || (axis == 1 && rank == 2), "concat",
                  "unsupported rank/axis");
  std::int64_t cat_dim = 0;
  bool any_grad = false;
  for (const auto& x : xs) {
    detail::require(x.rank() == rank, "concat", "rank mismatch");
    for (std::int64_t d = 0; d < rank; ++d)
      if (d != axis)
        detail::require(x.dim(d) == xs[0].dim(d), "concat", "non-concat dims must match");
    cat_dim += x.dim(axis);
    any_grad = any_grad || x.requires_grad();
  }
  Shape out_shape = xs[0].shape();
  out_shape[static_cast<std::size_t>(axis)] = cat_dim;
  Tensor<S> y = Tensor<S>::zeros(out_shape);

  if (axis == 0) {
    // Row-major: axis-0 blocks are contiguous.
    std::int64_t offset = 0;
    for (const auto& x : xs) {
      std::memcpy(y.data() + offset, x.data(), sizeof(S) * static_cast<std::size_t>(x.numel()));
      offset += x.numel();
    }
  } else {
    const std::int64_t rows = xs[0].dim(0);
    std::int64_t col0 = 0;
    for (const auto& x : xs) {
      const std::int64_t c = x.dim(1);
      for (std::int64_t r = 0; r < rows; ++r)
        std::memcpy(y.data() + r * cat_dim + col0, x.data() + r * c,
                    sizeof(S) * static_cast<std::size_t>(c));
      col0 += c;
    }
  }

  if (detail::recording<S>(any_grad)) {
    detail::record(y, [xs, y, axis, cat_dim]() mutable {
      const S* gy = y.grad();
      if (axis == 0) {
        std::int64_t offset = 0;
        for (auto x : xs) {
          if (x.requires_grad()) {
            S* gx = x.grad();
            for (std::int64_t i = 0; i < x.numel(); ++i) gx[i] += gy[offset + i];
          }
          offset += x.numel();
        }
      } else {
        const std::int64_t rows = xs[0].dim(0);
        std::int64_t col0 = 0;
        for (auto x : xs) {
          const std::int64_t c = x.dim(1);
          if (x.requires_grad()) {
            S* gx = x.grad();
            for (std::int64_t r = 0; r < rows; ++r)
              for (std::int64_t j = 0; j < c; ++j) gx[r * c + j] += gy[r * cat_dim + col0 + j];
          }
          col0 += c;
        }
      }
    });
  }
  return y;
}

template <typename S>
Tensor<S> concat(const Tensor<S>& a, const Tensor<S>& b, int axis = 0) {
  return concat(std::vector<Tensor<S>>{a, b}, axis);
}

// ---------------------------------------------------------------------------
// Max pooling over (a sub-range of) the time axis: x [C,T] -> [C]
// Gradient goes to the first argmax per channel.
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> pool_max(const Tensor<S>& x,
                   std::optional<std::pair<std::int64_t, std::int64_t>> span = std::nullopt) {
  detail::require(x.rank() == 2, "pool_max", "input must be rank 2 [C,T]");
  const std::int64_t c = x.dim(0), t_len = x.dim(1);
  const std::int64_t start = span ? span->first : 0;
  const std::int64_t end = span ? span->second : t_len;
  if (start == end)
    throw TensorError("pool_max: empty span [" + std::to_string(start) + "," +
                      std::to_string(end) + ")");
  detail::require(start >= 0 && start < end && end <= t_len, "pool_max",
                  "span out of bounds [" + std::to_string(start) + "," + std::to_string(end) +
                      ") for T=" + std::to_string(t_len));

  Tensor<S> y = Tensor<S>::zeros({c});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(c));
  for (std::int64_t i = 0; i < c; ++i) {
    const S* row = x.data() + i * t_len;
    std::int64_t best = start;
    for (std::int64_t t = start + 1; t < end; ++t)
      if (row[t] > row[best]) best = t;
    (*argmax)[static_cast<std::size_t>(i)] = best;
    y.data()[i] = row[best];
  }
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y, argmax, c, t_len]() mutable {
      Tensor<S> xc = x;
      const S* gy = y.grad();
      S* gx = xc.grad();
      for (std::int64_t i = 0; i < c; ++i) gx[i * t_len + (*argmax)[i]] += gy[i];
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Matrix ops for the attention baseline
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  detail::require(a.rank() == 2 && b.rank() == 2, "matmul", "both inputs must be rank 2");
  detail::require(a.dim(1) == b.dim(0), "matmul",
                  "inner dimensions " + std::to_string(a.dim(1)) + " vs " +
                      std::to_string(b.dim(0)));
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<S> y = Tensor<S>::zeros({m, n});
  y.mat(m, n).noalias() = a.mat(m, k) * b.mat(k, n);
  if (detail::recording<S>(a.requires_grad() || b.requires_grad())) {
    detail::record(y, [a, b, y, m, k, n]() mutable {
      Tensor<S> ac = a, bc = b;
      auto gy = y.grad_mat(m, n);
      if (ac.requires_grad()) ac.grad_mat(m, k).noalias() += gy * bc.mat(k, n).transpose();
      if (bc.requires_grad()) bc.grad_mat(k, n).noalias() += ac.mat(m, k).transpose() * gy;
    });
  }
  return y;
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& x) {
  detail::require(x.rank() == 2, "transpose", "input must be rank 2");
  const std::int64_t m = x.dim(0), n = x.dim(1);
  Tensor<S> y = Tensor<S>::zeros({n, m});
  y.mat(n, m) = x.mat(m, n).transpose();
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y, m, n]() mutable {
      Tensor<S> xc = x;
      xc.grad_mat(m, n) += y.grad_mat(n, m).transpose();
    });
  }
  return y;
}

template <typename S>
Tensor<S> slice_cols(const Tensor<S>& x, std::int64_t c0, std::int64_t c1) {
  detail::require(x.rank() == 2, "slice_cols", "input must be rank 2");
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  detail::require(0 <= c0 && c0 < c1 && c1 <= cols, "slice_cols", "column range out of bounds");
  const std::int64_t w = c1 - c0;
  Tensor<S> y = Tensor<S>::zeros({rows, w});
  for (std::int64_t r = 0; r < rows; ++r)
    std::memcpy(y.data() + r * w, x.data() + r * cols + c0, sizeof(S) * static_cast<std::size_t>(w));
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y, c0, rows, cols, w]() mutable {
      Tensor<S> xc = x;
      const S* gy = y.grad();
      S* gx = xc.grad();
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < w; ++j) gx[r * cols + c0 + j] += gy[r * w + j];
    });
  }
  return y;
}

// Stack rank-1 tensors of equal length into [n, K] rows.
template <typename S>
Tensor<S> stack_rows(const std::vector<Tensor<S>>& rows) {
  detail::require(!rows.empty(), "stack_rows", "empty input list");
  const std::int64_t k = rows[0].numel();
  bool any_grad = false;
  for (const auto& r : rows) {
    detail::require(r.rank() == 1 && r.numel() == k, "stack_rows", "rows must share length");
    any_grad = any_grad || r.requires_grad();
  }
  const std::int64_t n = static_cast<std::int64_t>(rows.size());
  Tensor<S> y = Tensor<S>::zeros({n, k});
  for (std::int64_t i = 0; i < n; ++i)
    std::memcpy(y.data() + i * k, rows[static_cast<std::size_t>(i)].data(),
                sizeof(S) * static_cast<std::size_t>(k));
  if (detail::recording<S>(any_grad)) {
    detail::record(y, [rows, y, k]() mutable {
      const S* gy = y.grad();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        Tensor<S> r = rows[i];
        if (!r.requires_grad()) continue;
        S* gr = r.grad();
        for (std::int64_t j = 0; j < k; ++j) gr[j] += gy[static_cast<std::int64_t>(i) * k + j];
      }
    });
  }
  return y;
}

// Softmax over each row of [R,C]; rows sum to 1.
template <typename S>
Tensor<S> row_softmax(const Tensor<S>& x) {
  detail::require(x.rank() == 2, "row_softmax", "input must be rank 2");
  const std::int64_t r = x.dim(0), c = x.dim(1);
  detail::require(c >= 1, "row_softmax", "empty rows");
  Tensor<S> y = Tensor<S>::zeros({r, c});
  for (std::int64_t i = 0; i < r; ++i) {
    const S* xi = x.data() + i * c;
    S* yi = y.data() + i * c;
    S m = xi[0];
    for (std::int64_t j = 1; j < c; ++j) m = std::max(m, xi[j]);
    S z = S(0);
    for (std::int64_t j = 0; j < c; ++j) {
      yi[j] = std::exp(xi[j] - m);
      z += yi[j];
    }
    for (std::int64_t j = 0; j < c; ++j) yi[j] /= z;
  }
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y, r, c]() mutable {
      Tensor<S> xc = x;
      const S* gy = y.grad();
      const S* yd = y.data();
      S* gx = xc.grad();
      for (std::int64_t i = 0; i < r; ++i) {
        S dot = S(0);
        for (std::int64_t j = 0; j < c; ++j) dot += gy[i * c + j] * yd[i * c + j];
        for (std::int64_t j = 0; j < c; ++j)
          gx[i * c + j] += yd[i * c + j] * (gy[i * c + j] - dot);
      }
    });
  }
  return y;
}

// Layer normalization over the last dim of [N,D].
template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     double eps = 1e-5) {
  detail::require(x.rank() == 2, "layer_norm", "input must be rank 2 [N,D]");
  const std::int64_t n = x.dim(0), d = x.dim(1);
  detail::require(gamma.rank() == 1 && gamma.dim(0) == d, "layer_norm", "gamma must be [D]");
  detail::require(beta.rank() == 1 && beta.dim(0) == d, "layer_norm", "beta must be [D]");
  Tensor<S> y = Tensor<S>::zeros({n, d});
  auto xhat = std::make_shared<TrackedVec<S>>(static_cast<std::size_t>(n * d));
  auto inv_sd = std::make_shared<TrackedVec<S>>(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const S* xi = x.data() + i * d;
    S mu = S(0);
    for (std::int64_t j = 0; j < d; ++j) mu += xi[j];
    mu /= static_cast<S>(d);
    S var = S(0);
    for (std::int64_t j = 0; j < d; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<S>(d);
    const S inv = S(1) / std::sqrt(var + static_cast<S>(eps));
    (*inv_sd)[static_cast<std::size_t>(i)] = inv;
    S* yi = y.data() + i * d;
    for (std::int64_t j = 0; j < d; ++j) {
      const S h = (xi[j] - mu) * inv;
      (*xhat)[static_cast<std::size_t>(i * d + j)] = h;
      yi[j] = gamma.data()[j] * h + beta.data()[j];
    }
  }
  if (detail::recording<S>(x.requires_grad() || gamma.requires_grad() || beta.requires_grad())) {
    detail::record(y, [x, gamma, beta, y, xhat, inv_sd, n, d]() mutable {
      Tensor<S> xc = x, gc = gamma, bc = beta;
      const S* gy = y.grad();
      for (std::int64_t i = 0; i < n; ++i) {
        const S inv = (*inv_sd)[static_cast<std::size_t>(i)];
        S mean_dh = S(0), mean_dhh = S(0);
        for (std::int64_t j = 0; j < d; ++j) {
          const S dh = gy[i * d + j] * gc.data()[j];
          const S h = (*xhat)[static_cast<std::size_t>(i * d + j)];
          mean_dh += dh;
          mean_dhh += dh * h;
        }
        mean_dh /= static_cast<S>(d);
        mean_dhh /= static_cast<S>(d);
        if (xc.requires_grad()) {
          S* gx = xc.grad();
          for (std::int64_t j = 0; j < d; ++j) {
            const S dh = gy[i * d + j] * gc.data()[j];
            const S h = (*xhat)[static_cast<std::size_t>(i * d + j)];
            gx[i * d + j] += inv * (dh - mean_dh - h * mean_dhh);
          }
        }
        if (gc.requires_grad()) {
          S* gg = gc.grad();
          for (std::int64_t j = 0; j < d; ++j)
            gg[j] += gy[i * d + j] * (*xhat)[static_cast<std::size_t>(i * d + j)];
        }
        if (bc.requires_grad()) {
          S* gb = bc.grad();
          for (std::int64_t j = 0; j < d; ++j) gb[j] += gy[i * d + j];
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Reductions and losses
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  Tensor<S> y = Tensor<S>::zeros({1});
  S acc = S(0);
  const S* xd = x.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) acc += xd[i];
  y.data()[0] = acc;
  if (detail::recording<S>(x.requires_grad())) {
    detail::record(y, [x, y]() mutable {
      Tensor<S> xc = x;
      const S g = y.grad()[0];
      S* gx = xc.grad();
      for (std::int64_t i = 0; i < xc.numel(); ++i) gx[i] += g;
    });
  }
  return y;
}

// -log softmax(logits)[target], max-subtracted for stability. Scalar output.
template <typename S>
Tensor<S> softmax_cross_entropy(const Tensor<S>& logits, std::int64_t target) {
  detail::require(logits.rank() == 1, "softmax_cross_entropy", "logits must be rank 1");
  const std::int64_t k = logits.dim(0);
  detail::require(k >= 2, "softmax_cross_entropy", "needs at least 2 classes");
  if (target < 0 || target >= k)
    throw TensorError("softmax_cross_entropy: target " + std::to_string(target) +
                      " out of range for K=" + std::to_string(k));
  const S* z = logits.data();
  for (std::int64_t i = 0; i < k; ++i)
    if (!std::isfinite(static_cast<double>(z[i])))
      throw TensorError("softmax_cross_entropy: non-finite logits");
  S m = z[0];
  for (std::int64_t i = 1; i < k; ++i) m = std::max(m, z[i]);
  S acc = S(0);
  for (std::int64_t i = 0; i < k; ++i) acc += std::exp(z[i] - m);
  const S lse = m + std::log(acc);
  Tensor<S> loss = Tensor<S>::zeros({1});
  loss.data()[0] = lse - z[target];
  if (detail::recording<S>(logits.requires_grad())) {
    detail::record(loss, [logits, loss, target, k, lse]() mutable {
      Tensor<S> lc = logits;
      const S g = loss.grad()[0];
      const S* z = lc.data();
      S* gz = lc.grad();
      for (std::int64_t i = 0; i < k; ++i) {
        const S p = std::exp(z[i] - lse);
        gz[i] += g * (p - (i == target ? S(1) : S(0)));
      }
    });
  }
  return loss;
}

// Mean over all elements of the stable binary cross entropy with logits.
template <typename S>
Tensor<S> sigmoid_bce(const Tensor<S>& logits, const Tensor<S>& targets) {
  detail::require(logits.shape() == targets.shape(), "sigmoid_bce",
                  "shape mismatch " + shape_str(logits.shape()) + " vs " +
                      shape_str(targets.shape()));
  const std::int64_t n = logits.numel();
  detail::require(n >= 1, "sigmoid_bce", "empty logits");
  const S* z = logits.data();
  const S* y = targets.data();
  for (std::int64_t i = 0; i < n; ++i)
    if (y[i] != S(0) && y[i] != S(1))
      throw TensorError("sigmoid_bce: non-binary targets");
  S acc = S(0);
  for (std::int64_t i = 0; i < n; ++i) {
    // max(z,0) - z*y + log(1 + exp(-|z|))
    acc += std::max(z[i], S(0)) - z[i] * y[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  Tensor<S> loss = Tensor<S>::zeros({1});
  loss.data()[0] = acc / static_cast<S>(n);
  if (detail::recording<S>(logits.requires_grad())) {
    detail::record(loss, [logits, targets, loss, n]() mutable {
      Tensor<S> lc = logits;
      const S g = loss.grad()[0] / static_cast<S>(n);
      const S* z = lc.data();
      const S* y = targets.data();
      S* gz = lc.grad();
      for (std::int64_t i = 0; i < n; ++i) {
        const S s = z[i] >= S(0) ? S(1) / (S(1) + std::exp(-z[i]))
                                 : S(1) - S(1) / (S(1) + std::exp(z[i]));
        gz[i] += g * (s - y[i]);
      }
    });
  }
  return loss;
}

}  // namespace longconv
