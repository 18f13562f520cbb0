/*
 * Copyright 2026 The fixedhead Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fixedhead/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fixedhead/errors.hpp"
#include "gemm.hpp"

namespace fixedhead {

namespace {

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(v.shape()));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

void accumulate(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions differ: " + shape_string(a.shape()) + " * " +
                     shape_string(b.shape()));
  }
  Tensor out({m, n});
  detail::gemm_nn(m, n, k, a.value().data().data(), b.value().data().data(), out.data().data());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [=](Tape& t, std::span<const double> g) {
    if (auto da = t.grad_sink(ia); !da.empty()) {
      detail::gemm_nt(m, k, n, g.data(), t.value(ib).data().data(), da.data());
    }
    if (auto db = t.grad_sink(ib); !db.empty()) {
      detail::gemm_tn(k, n, m, t.value(ia).data().data(), g.data(), db.data());
    }
  });
}

Var transpose(Var a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  Tensor out({c, r});
  const auto& v = a.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = v.at(i, j);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::span<const double> g) {
    auto da = t.grad_sink(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) da[i * c + j] += g[j * r + i];
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  out.clear_grad();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [=](Tape& t, std::span<const double> g) {
    if (auto da = t.grad_sink(ia); !da.empty()) accumulate(da, g);
    if (auto db = t.grad_sink(ib); !db.empty()) accumulate(db, g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  auto av = a.value().data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [=](Tape& t, std::span<const double> g) {
    auto x = t.value(ia).data();
    auto y = t.value(ib).data();
    if (auto da = t.grad_sink(ia); !da.empty())
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i];
    if (auto db = t.grad_sink(ib); !db.empty())
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * x[i];
  });
}

Var add_bias(Var x, Var bias) {
  require_rank(x, 2, "add_bias");
  const std::size_t n = x.shape()[0], k = x.shape()[1];
  if (bias.value().size() != k) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " does not match " +
                     shape_string(x.shape()));
  }
  Tensor out = x.value();
  out.clear_grad();
  auto bv = bias.value().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out.at(i, j) += bv[j];
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(out), {x, bias}, [=](Tape& t, std::span<const double> g) {
    if (auto dx = t.grad_sink(ix); !dx.empty()) accumulate(dx, g);
    if (auto db = t.grad_sink(ib); !db.empty())
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) db[j] += g[i * k + j];
  });
}

Var scale(Var x, Var s) {
  if (s.value().size() != 1) throw ShapeError("scale: factor must have one element");
  const double factor = s.value()[0];
  Tensor out(x.shape());
  auto xv = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * xv[i];
  const std::size_t ix = x.id(), is = s.id();
  return x.tape().record(std::move(out), {x, s}, [=](Tape& t, std::span<const double> g) {
    if (auto dx = t.grad_sink(ix); !dx.empty())
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += factor * g[i];
    if (auto ds = t.grad_sink(is); !ds.empty()) {
      auto v = t.value(ix).data();
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * v[i];
      ds[0] += acc;
    }
  });
}

Var relu(Var x) {
  Tensor out(x.shape());
  auto xv = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [=](Tape& t, std::span<const double> g) {
    auto v = t.value(ix).data();
    auto dx = t.grad_sink(ix);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (v[i] > 0.0) dx[i] += g[i];
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return x.tape().record(Tensor::scalar(s), {x}, [=](Tape& t, std::span<const double> g) {
    auto dx = t.grad_sink(ix);
    for (auto& d : dx) d += g[0];
  });
}

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride,
                             std::size_t padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t n, cin, h, w;
  std::size_t cout, kh, kw;
  std::size_t groups, cin_g, cout_g;
  std::size_t stride, pad;
  std::size_t ho, wo;

  std::size_t patch() const { return cin_g * kh * kw; }
  std::size_t positions() const { return ho * wo; }
};

// cols[(c*kh + i)*kw + j][oy*wo + ox] = x[n][g*cin_g + c][oy*s + i - p][ox*s + j - p]
void im2col(const ConvGeometry& g, const double* x, std::size_t n, std::size_t group, double* cols) {
  const std::size_t P = g.positions();
  for (std::size_t c = 0; c < g.cin_g; ++c) {
    const double* plane = x + ((n * g.cin) + group * g.cin_g + c) * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* row = cols + ((c * g.kh + i) * g.kw + j) * P;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                                      static_cast<std::ptrdiff_t>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.h) &&
                                ix < static_cast<std::ptrdiff_t>(g.w);
            row[oy * g.wo + ox] = inside ? plane[iy * g.w + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const ConvGeometry& g, const double* cols, std::size_t n, std::size_t group, double* dx) {
  const std::size_t P = g.positions();
  for (std::size_t c = 0; c < g.cin_g; ++c) {
    double* plane = dx + ((n * g.cin) + group * g.cin_g + c) * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* row = cols + ((c * g.kh + i) * g.kw + j) * P;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                                      static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            plane[iy * g.w + ix] += row[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var x, Var w, std::optional<Var> bias, Conv2dOptions opts) {
  require_rank(x, 4, "conv2d input");
  require_rank(w, 4, "conv2d weight");
  ConvGeometry g{};
  g.n = x.shape()[0];
  g.cin = x.shape()[1];
  g.h = x.shape()[2];
  g.w = x.shape()[3];
  g.cout = w.shape()[0];
  g.kh = w.shape()[2];
  g.kw = w.shape()[3];
  g.groups = opts.groups;
  g.stride = opts.stride;
  g.pad = opts.padding;
  if (g.groups == 0 || g.stride == 0) throw ShapeError("conv2d: groups and stride must be >= 1");
  if (g.cin % g.groups != 0 || g.cout % g.groups != 0) {
    throw ShapeError("conv2d: channels (" + std::to_string(g.cin) + " in, " + std::to_string(g.cout) +
                     " out) not divisible by groups " + std::to_string(g.groups));
  }
  g.cin_g = g.cin / g.groups;
  g.cout_g = g.cout / g.groups;
  if (w.shape()[1] != g.cin_g) {
    throw ShapeError("conv2d: weight " + shape_string(w.shape()) + " expects " +
                     std::to_string(w.shape()[1] * g.groups) + " input channels, got " +
                     std::to_string(g.cin));
  }
  if (g.kh > g.h + 2 * g.pad || g.kw > g.w + 2 * g.pad) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
  if (bias && bias->value().size() != g.cout) throw ShapeError("conv2d: bias length mismatch");
  g.ho = conv_output_size(g.h, g.kh, g.stride, g.pad);
  g.wo = conv_output_size(g.w, g.kw, g.stride, g.pad);

  Tensor out({g.n, g.cout, g.ho, g.wo});
  const std::size_t P = g.positions(), K = g.patch();
  std::vector<double> cols(K * P);
  const double* xd = x.value().data().data();
  const double* wd = w.value().data().data();
  double* od = out.data().data();
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t grp = 0; grp < g.groups; ++grp) {
      im2col(g, xd, n, grp, cols.data());
      detail::gemm_nn(g.cout_g, P, K, wd + grp * g.cout_g * K, cols.data(),
                      od + (n * g.cout + grp * g.cout_g) * P);
    }
    if (bias) {
      auto bv = bias->value().data();
      for (std::size_t c = 0; c < g.cout; ++c) {
        double* plane = od + (n * g.cout + c) * P;
        for (std::size_t p = 0; p < P; ++p) plane[p] += bv[c];
      }
    }
  }

  const std::size_t ix = x.id(), iw = w.id();
  const std::optional<std::size_t> ib = bias ? std::optional(bias->id()) : std::nullopt;
  auto backward = [=](Tape& t, std::span<const double> gout) {
    auto dx = t.grad_sink(ix);
    auto dw = t.grad_sink(iw);
    std::vector<double> col(K * P), dcol(K * P);
    const double* xv = t.value(ix).data().data();
    const double* wv = t.value(iw).data().data();
    for (std::size_t n = 0; n < g.n; ++n) {
      for (std::size_t grp = 0; grp < g.groups; ++grp) {
        const double* gy = gout.data() + (n * g.cout + grp * g.cout_g) * P;
        if (!dw.empty()) {
          im2col(g, xv, n, grp, col.data());
          detail::gemm_nt(g.cout_g, K, P, gy, col.data(), dw.data() + grp * g.cout_g * K);
        }
        if (!dx.empty()) {
          std::fill(dcol.begin(), dcol.end(), 0.0);
          detail::gemm_tn(K, P, g.cout_g, wv + grp * g.cout_g * K, gy, dcol.data());
          col2im(g, dcol.data(), n, grp, dx.data());
        }
      }
    }
    if (ib) {
      if (auto db = t.grad_sink(*ib); !db.empty()) {
        for (std::size_t n = 0; n < g.n; ++n)
          for (std::size_t c = 0; c < g.cout; ++c) {
            const double* plane = gout.data() + (n * g.cout + c) * P;
            double s = 0.0;
            for (std::size_t p = 0; p < P; ++p) s += plane[p];
            db[c] += s;
          }
      }
    }
  };
  if (bias) return x.tape().record(std::move(out), {x, w, *bias}, backward);
  return x.tape().record(std::move(out), {x, w}, backward);
}

Var batchnorm2d(Var x, Var gamma, Var beta, BatchNormBuffers& buffers, Mode mode,
                BatchNormOptions opts) {
  require_rank(x, 4, "batchnorm2d");
  const std::size_t N = x.shape()[0], C = x.shape()[1], HW = x.shape()[2] * x.shape()[3];
  if (gamma.value().size() != C || beta.value().size() != C || buffers.running_mean.size() != C ||
      buffers.running_var.size() != C) {
    throw ShapeError("batchnorm2d: parameter length does not match " + std::to_string(C) +
                     " channels");
  }
  const std::size_t m = N * HW;
  if (mode == Mode::Train && m < 2) {
    throw DegenerateStatisticsError("batchnorm2d: train mode needs at least two values per channel");
  }

  const auto xv = x.value().data();
  const auto gv = gamma.value().data();
  const auto bv = beta.value().data();
  std::vector<double> mean(C), invstd(C);
  for (std::size_t c = 0; c < C; ++c) {
    double mu, var;
    if (mode == Mode::Train) {
      double s = 0.0;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t p = 0; p < HW; ++p) s += xv[(n * C + c) * HW + p];
      mu = s / static_cast<double>(m);
      double ss = 0.0;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t p = 0; p < HW; ++p) {
          const double d = xv[(n * C + c) * HW + p] - mu;
          ss += d * d;
        }
      var = ss / static_cast<double>(m);
      const double unbiased = ss / static_cast<double>(m - 1);
      buffers.running_mean[c] = (1.0 - opts.momentum) * buffers.running_mean[c] + opts.momentum * mu;
      buffers.running_var[c] = (1.0 - opts.momentum) * buffers.running_var[c] + opts.momentum * unbiased;
    } else {
      mu = buffers.running_mean[c];
      var = buffers.running_var[c];
    }
    mean[c] = mu;
    invstd[c] = 1.0 / std::sqrt(var + opts.eps);
  }

  Tensor out(x.shape());
  auto od = out.data();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t p = 0; p < HW; ++p) {
        const std::size_t i = (n * C + c) * HW + p;
        od[i] = (xv[i] - mean[c]) * invstd[c] * gv[c] + bv[c];
      }

  const std::size_t ix = x.id(), ig = gamma.id(), ibeta = beta.id();
  const bool train = mode == Mode::Train;
  return x.tape().record(std::move(out), {x, gamma, beta}, [=](Tape& t, std::span<const double> g) {
    const auto xs = t.value(ix).data();
    const auto gam = t.value(ig).data();
    auto dx = t.grad_sink(ix);
    auto dg = t.grad_sink(ig);
    auto db = t.grad_sink(ibeta);
    for (std::size_t c = 0; c < C; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t p = 0; p < HW; ++p) {
          const std::size_t i = (n * C + c) * HW + p;
          const double xhat = (xs[i] - mean[c]) * invstd[c];
          sum_dy += g[i];
          sum_dy_xhat += g[i] * xhat;
        }
      if (!dg.empty()) dg[c] += sum_dy_xhat;
      if (!db.empty()) db[c] += sum_dy;
      if (dx.empty()) continue;
      const double md = static_cast<double>(m);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t p = 0; p < HW; ++p) {
          const std::size_t i = (n * C + c) * HW + p;
          if (train) {
            const double xhat = (xs[i] - mean[c]) * invstd[c];
            dx[i] += gam[c] * invstd[c] / md * (md * g[i] - sum_dy - xhat * sum_dy_xhat);
          } else {
            dx[i] += g[i] * gam[c] * invstd[c];
          }
        }
    }
  });
}

double spatial_mean(std::span<const double> map) {
  double s = 0.0;
  for (double v : map) s += v;
  return s / static_cast<double>(map.size());
}

Var global_avg_pool(Var x) {
  require_rank(x, 4, "global_avg_pool");
  const std::size_t N = x.shape()[0], C = x.shape()[1], HW = x.shape()[2] * x.shape()[3];
  Tensor out({N, C});
  const auto xv = x.value().data();
  for (std::size_t i = 0; i < N * C; ++i) out[i] = spatial_mean(xv.subspan(i * HW, HW));
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [=](Tape& t, std::span<const double> g) {
    auto dx = t.grad_sink(ix);
    const double inv = 1.0 / static_cast<double>(HW);
    for (std::size_t i = 0; i < N * C; ++i)
      for (std::size_t p = 0; p < HW; ++p) dx[i * HW + p] += g[i] * inv;
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> targets) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const std::size_t N = logits.shape()[0], K = logits.shape()[1];
  if (targets.size() != N) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " labels for " +
                     std::to_string(N) + " rows");
  }
  for (int y : targets) {
    if (y < 0 || static_cast<std::size_t>(y) >= K) {
      throw LabelError("label " + std::to_string(y) + " outside [0, " + std::to_string(K) + ")");
    }
  }
  const auto& z = logits.value();
  std::vector<double> probs(N * K);
  double loss = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, z.at(i, k));
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      probs[i * K + k] = std::exp(z.at(i, k) - mx);
      s += probs[i * K + k];
    }
    for (std::size_t k = 0; k < K; ++k) probs[i * K + k] /= s;
    loss += std::log(s) + mx - z.at(i, targets[i]);
  }
  loss /= static_cast<double>(N);

  std::vector<int> labels(targets.begin(), targets.end());
  const std::size_t iz = logits.id();
  return logits.tape().record(
      Tensor::scalar(loss), {logits},
      [=, probs = std::move(probs), labels = std::move(labels)](Tape& t, std::span<const double> g) {
        auto dz = t.grad_sink(iz);
        const double s = g[0] / static_cast<double>(N);
        for (std::size_t i = 0; i < N; ++i)
          for (std::size_t k = 0; k < K; ++k) {
            const double onehot = static_cast<std::size_t>(labels[i]) == k ? 1.0 : 0.0;
            dz[i * K + k] += s * (probs[i * K + k] - onehot);
          }
      });
}

}  // namespace fixedhead
