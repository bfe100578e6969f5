#include "rega/ops.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include "rega/kernels.hpp"

namespace rega::ops {

namespace {

bool track_grad(std::initializer_list<const Tensor*> parents) {
  if (!grad_enabled()) return false;
  for (const Tensor* p : parents)
    if (p->requires_grad()) return true;
  return false;
}

void require_rank4(const Tensor& t, const char* what) {
  if (t.rank() != 4)
    throw ShapeError(std::string(what) + " must be rank 4, got " + shape_str(t.dims()));
}

// Equal shapes, or b = (N,C,1,1) against a = (N,C,H,W).
enum class BinaryMode { kSame, kBroadcastB };

BinaryMode binary_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dims() == b.dims()) return BinaryMode::kSame;
  if (a.rank() == 4 && b.rank() == 4 && a.size(0) == b.size(0) && a.size(1) == b.size(1) &&
      b.size(2) == 1 && b.size(3) == 1)
    return BinaryMode::kBroadcastB;
  throw ShapeError(std::string(op) + ": shapes " + shape_str(a.dims()) + " and " +
                   shape_str(b.dims()) + " are neither equal nor (N,C,1,1)-broadcastable");
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  require_rank4(input, "conv2d input");
  require_rank4(kernel, "conv2d kernel");
  if (stride < 1) throw ValueError("conv2d: stride must be >= 1");
  if (padding < 0) throw ValueError("conv2d: padding must be >= 0");
  if (input.size(1) != kernel.size(1))
    throw ShapeError("conv2d: input channels " + shape_str(input.dims()) +
                     " do not match kernel " + shape_str(kernel.dims()));
  ConvDims d = make_conv_dims(input.size(0), input.size(1), input.size(2), input.size(3),
                              kernel.size(0), kernel.size(2), kernel.size(3), stride, padding);
  if (d.kh > d.h + 2 * d.pad || d.kw > d.w + 2 * d.pad || d.oh < 1 || d.ow < 1)
    throw ShapeError("conv2d: zero-size output for input " + shape_str(input.dims()) +
                     ", kernel " + shape_str(kernel.dims()) + ", stride " +
                     std::to_string(stride) + ", padding " + std::to_string(padding));

  const bool track = track_grad({&input, &kernel});
  Tensor out = Tensor::zeros({d.n, d.cout, d.oh, d.ow}, track);
  kernels::conv2d_forward(input.data().data(), kernel.data().data(), out.mutable_data().data(), d);
  debug_check_finite(out, "conv2d");
  if (track) {
    out.set_node("conv2d", {input, kernel}, [input, kernel, d](const Tensor& o) {
      const double* g = o.grad().data();
      if (input.requires_grad())
        kernels::conv2d_backward_input(g, kernel.data().data(), input.grad_accum_buffer(), d);
      if (kernel.requires_grad())
        kernels::conv2d_backward_kernel(g, input.data().data(), kernel.grad_accum_buffer(), d);
    });
  }
  return out;
}

Tensor adaptive_avg_pool2d(const Tensor& input, int out_h, int out_w) {
  require_rank4(input, "adaptive_avg_pool2d input");
  const int h = input.size(2), w = input.size(3);
  if (out_h < 1 || out_w < 1)
    throw ValueError("adaptive_avg_pool2d: output extents must be positive");
  if (out_h > h || out_w > w)
    throw ValueError("adaptive_avg_pool2d: cannot upsample " + shape_str(input.dims()) +
                     " to " + std::to_string(out_h) + "x" + std::to_string(out_w));
  const int n = input.size(0), c = input.size(1);
  const bool track = track_grad({&input});
  Tensor out = Tensor::zeros({n, c, out_h, out_w}, track);
  kernels::avg_pool_forward(input.data().data(), out.mutable_data().data(), n, c, h, w, out_h, out_w);
  debug_check_finite(out, "adaptive_avg_pool2d");
  if (track) {
    out.set_node("adaptive_avg_pool2d", {input}, [input, n, c, h, w, out_h, out_w](const Tensor& o) {
      kernels::avg_pool_backward(o.grad().data(), input.grad_accum_buffer(), n, c, h, w, out_h, out_w);
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const BinaryMode mode = binary_mode(a, b, "mul");
  const bool track = track_grad({&a, &b});
  Tensor out = Tensor::zeros(a.dims(), track);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.mutable_data().data();
  const std::size_t total = a.numel();
  if (mode == BinaryMode::kSame) {
#pragma omp parallel for schedule(static)
    for (long long e = 0; e < static_cast<long long>(total); ++e) po[e] = pa[e] * pb[e];
  } else {
    const std::size_t plane = static_cast<std::size_t>(a.size(2)) * a.size(3);
#pragma omp parallel for schedule(static)
    for (long long nc = 0; nc < static_cast<long long>(total / plane); ++nc) {
      const double bv = pb[nc];
      for (std::size_t e = 0; e < plane; ++e) po[nc * plane + e] = pa[nc * plane + e] * bv;
    }
  }
  debug_check_finite(out, "mul");
  if (track) {
    out.set_node("mul", {a, b}, [a, b, mode](const Tensor& o) {
      const double* g = o.grad().data();
      const std::size_t total = a.numel();
      if (mode == BinaryMode::kSame) {
        if (a.requires_grad()) {
          double* ga = a.grad_accum_buffer();
          const double* pb = b.data().data();
          for (std::size_t e = 0; e < total; ++e) ga[e] += g[e] * pb[e];
        }
        if (b.requires_grad()) {
          double* gb = b.grad_accum_buffer();
          const double* pa = a.data().data();
          for (std::size_t e = 0; e < total; ++e) gb[e] += g[e] * pa[e];
        }
      } else {
        const std::size_t plane = static_cast<std::size_t>(a.size(2)) * a.size(3);
        const std::size_t planes = total / plane;
        if (a.requires_grad()) {
          double* ga = a.grad_accum_buffer();
          const double* pb = b.data().data();
          for (std::size_t nc = 0; nc < planes; ++nc)
            for (std::size_t e = 0; e < plane; ++e) ga[nc * plane + e] += g[nc * plane + e] * pb[nc];
        }
        if (b.requires_grad()) {
          double* gb = b.grad_accum_buffer();
          const double* pa = a.data().data();
          for (std::size_t nc = 0; nc < planes; ++nc) {
            double acc = 0.0;
            for (std::size_t e = 0; e < plane; ++e) acc += g[nc * plane + e] * pa[nc * plane + e];
            gb[nc] += acc;
          }
        }
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  const BinaryMode mode = binary_mode(a, b, "add");
  const bool track = track_grad({&a, &b});
  Tensor out = Tensor::zeros(a.dims(), track);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.mutable_data().data();
  const std::size_t total = a.numel();
  if (mode == BinaryMode::kSame) {
#pragma omp parallel for schedule(static)
    for (long long e = 0; e < static_cast<long long>(total); ++e) po[e] = pa[e] + pb[e];
  } else {
    const std::size_t plane = static_cast<std::size_t>(a.size(2)) * a.size(3);
#pragma omp parallel for schedule(static)
    for (long long nc = 0; nc < static_cast<long long>(total / plane); ++nc) {
      const double bv = pb[nc];
      for (std::size_t e = 0; e < plane; ++e) po[nc * plane + e] = pa[nc * plane + e] + bv;
    }
  }
  debug_check_finite(out, "add");
  if (track) {
    out.set_node("add", {a, b}, [a, b, mode](const Tensor& o) {
      const double* g = o.grad().data();
      const std::size_t total = a.numel();
      if (a.requires_grad()) a.accumulate_grad(g, total);
      if (b.requires_grad()) {
        if (mode == BinaryMode::kSame) {
          b.accumulate_grad(g, total);
        } else {
          const std::size_t plane = static_cast<std::size_t>(a.size(2)) * a.size(3);
          double* gb = b.grad_accum_buffer();
          for (std::size_t nc = 0; nc < total / plane; ++nc) {
            double acc = 0.0;
            for (std::size_t e = 0; e < plane; ++e) acc += g[nc * plane + e];
            gb[nc] += acc;
          }
        }
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& a) {
  const bool track = track_grad({&a});
  Tensor out = Tensor::zeros(a.dims(), track);
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  const std::size_t total = a.numel();
#pragma omp parallel for schedule(static)
  for (long long e = 0; e < static_cast<long long>(total); ++e) po[e] = pa[e] > 0.0 ? pa[e] : 0.0;
  debug_check_finite(out, "relu");
  if (track) {
    out.set_node("relu", {a}, [a](const Tensor& o) {
      const double* g = o.grad().data();
      const double* pa = a.data().data();
      double* ga = a.grad_accum_buffer();
      const std::size_t total = a.numel();
      for (std::size_t e = 0; e < total; ++e)
        if (pa[e] > 0.0) ga[e] += g[e];
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& a) {
  const bool track = track_grad({&a});
  Tensor out = Tensor::zeros(a.dims(), track);
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  const std::size_t total = a.numel();
  // Saturated tails round to exactly 0 or 1 in f64; nudge them back inside so
  // the output range stays strictly (0, 1) for every finite input.
  const double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
#pragma omp parallel for schedule(static)
  for (long long e = 0; e < static_cast<long long>(total); ++e) {
    double v = 1.0 / (1.0 + std::exp(-pa[e]));
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    po[e] = v;
  }
  debug_check_finite(out, "sigmoid");
  if (track) {
    out.set_node("sigmoid", {a}, [a](const Tensor& o) {
      const double* g = o.grad().data();
      const double* py = o.data().data();
      double* ga = a.grad_accum_buffer();
      const std::size_t total = a.numel();
      for (std::size_t e = 0; e < total; ++e) ga[e] += g[e] * py[e] * (1.0 - py[e]);
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  const bool track = track_grad({&a});
  Tensor out = Tensor::zeros(a.dims(), track);
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  const std::size_t total = a.numel();
  for (std::size_t e = 0; e < total; ++e) po[e] = pa[e] * factor;
  debug_check_finite(out, "scale");
  if (track) {
    out.set_node("scale", {a}, [a, factor](const Tensor& o) {
      const double* g = o.grad().data();
      double* ga = a.grad_accum_buffer();
      const std::size_t total = a.numel();
      for (std::size_t e = 0; e < total; ++e) ga[e] += g[e] * factor;
    });
  }
  return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValueError("concat_channels: no parts");
  const Tensor& first = parts.front();
  require_rank4(first, "concat_channels part");
  int channels = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    require_rank4(parts[p], "concat_channels part");
    if (parts[p].size(0) != first.size(0) || parts[p].size(2) != first.size(2) ||
        parts[p].size(3) != first.size(3))
      throw ShapeError("concat_channels: part " + std::to_string(p) + " has shape " +
                       shape_str(parts[p].dims()) + ", expected N/H/W of " +
                       shape_str(first.dims()));
    channels += parts[p].size(1);
  }
  const int n = first.size(0), h = first.size(2), w = first.size(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  bool track = false;
  for (const Tensor& p : parts) track = track || track_grad({&p});
  Tensor out = Tensor::zeros({n, channels, h, w}, track);
  double* po = out.mutable_data().data();
  int c_off = 0;
  for (const Tensor& part : parts) {
    const int pc = part.size(1);
    for (int b = 0; b < n; ++b)
      std::memcpy(po + (static_cast<std::size_t>(b) * channels + c_off) * plane,
                  part.data().data() + static_cast<std::size_t>(b) * pc * plane,
                  sizeof(double) * pc * plane);
    c_off += pc;
  }
  if (track) {
    std::vector<Tensor> parents = parts;
    out.set_node("concat_channels", parents, [parents, n, channels, plane](const Tensor& o) {
      const double* g = o.grad().data();
      int c_off = 0;
      for (const Tensor& part : parents) {
        const int pc = part.size(1);
        if (part.requires_grad()) {
          double* gp = part.grad_accum_buffer();
          for (int b = 0; b < n; ++b) {
            const double* src = g + (static_cast<std::size_t>(b) * channels + c_off) * plane;
            double* dst = gp + static_cast<std::size_t>(b) * pc * plane;
            for (std::size_t e = 0; e < pc * plane; ++e) dst[e] += src[e];
          }
        }
        c_off += pc;
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  const bool track = track_grad({&a});
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  Tensor out = Tensor::from_data({1}, {acc}, track);
  if (track) {
    out.set_node("sum", {a}, [a](const Tensor& o) {
      const double g = o.grad()[0];
      double* ga = a.grad_accum_buffer();
      const std::size_t total = a.numel();
      for (std::size_t e = 0; e < total; ++e) ga[e] += g;
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape dims) {
  if (shape_numel(dims) != a.numel())
    throw ShapeError("reshape: cannot view " + shape_str(a.dims()) + " as " + shape_str(dims));
  const bool track = track_grad({&a});
  Tensor out = Tensor::from_data(std::move(dims), a.data(), track);
  if (track) {
    out.set_node("reshape", {a}, [a](const Tensor& o) {
      if (a.requires_grad()) a.accumulate_grad(o.grad().data(), a.numel());
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1)
    throw ShapeError("linear: expected x NxC, w KxC, b K; got " + shape_str(x.dims()) + ", " +
                     shape_str(w.dims()) + ", " + shape_str(b.dims()));
  const int n = x.size(0), c = x.size(1), k = w.size(0);
  if (w.size(1) != c || b.size(0) != k)
    throw ShapeError("linear: inconsistent shapes " + shape_str(x.dims()) + ", " +
                     shape_str(w.dims()) + ", " + shape_str(b.dims()));
  const bool track = track_grad({&x, &w, &b});
  Tensor out = Tensor::zeros({n, k}, track);
  const double* px = x.data().data();
  const double* pw = w.data().data();
  const double* pb = b.data().data();
  double* po = out.mutable_data().data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      double acc = pb[j];
      for (int e = 0; e < c; ++e) acc += px[i * c + e] * pw[j * c + e];
      po[i * k + j] = acc;
    }
  }
  debug_check_finite(out, "linear");
  if (track) {
    out.set_node("linear", {x, w, b}, [x, w, b, n, c, k](const Tensor& o) {
      const double* g = o.grad().data();
      if (x.requires_grad()) {
        double* gx = x.grad_accum_buffer();
        const double* pw = w.data().data();
        for (int i = 0; i < n; ++i)
          for (int e = 0; e < c; ++e) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += g[i * k + j] * pw[j * c + e];
            gx[i * c + e] += acc;
          }
      }
      if (w.requires_grad()) {
        double* gw = w.grad_accum_buffer();
        const double* px = x.data().data();
        for (int j = 0; j < k; ++j)
          for (int e = 0; e < c; ++e) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += g[i * k + j] * px[i * c + e];
            gw[j * c + e] += acc;
          }
      }
      if (b.requires_grad()) {
        double* gb = b.grad_accum_buffer();
        for (int j = 0; j < k; ++j) {
          double acc = 0.0;
          for (int i = 0; i < n; ++i) acc += g[i * k + j];
          gb[j] += acc;
        }
      }
    });
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2)
    throw ShapeError("softmax_cross_entropy: logits must be NxK, got " + shape_str(logits.dims()));
  const int n = logits.size(0), k = logits.size(1);
  if (static_cast<int>(labels.size()) != n)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  for (int label : labels)
    if (label < 0 || label >= k)
      throw ValueError("softmax_cross_entropy: label " + std::to_string(label) +
                       " outside [0, " + std::to_string(k) + ")");
  const double* pl = logits.data().data();
  std::vector<double> probs(static_cast<std::size_t>(n) * k);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = pl + static_cast<std::size_t>(i) * k;
    double m = row[0];
    for (int j = 1; j < k; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(row[j] - m);
    const double lse = m + std::log(z);
    for (int j = 0; j < k; ++j) probs[static_cast<std::size_t>(i) * k + j] = std::exp(row[j] - lse);
    loss += lse - row[labels[i]];
  }
  loss /= n;
  const bool track = track_grad({&logits});
  Tensor out = Tensor::from_data({1}, {loss}, track);
  if (track) {
    out.set_node("softmax_cross_entropy", {logits},
                 [logits, labels, probs = std::move(probs), n, k](const Tensor& o) {
                   const double g = o.grad()[0] / n;
                   double* gl = logits.grad_accum_buffer();
                   for (int i = 0; i < n; ++i)
                     for (int j = 0; j < k; ++j) {
                       const double onehot = (j == labels[i]) ? 1.0 : 0.0;
                       gl[static_cast<std::size_t>(i) * k + j] +=
                           g * (probs[static_cast<std::size_t>(i) * k + j] - onehot);
                     }
                 });
  }
  return out;
}

BatchNormState BatchNormState::create(int channels) {
  BatchNormState s;
  s.gamma = Tensor::full({channels}, 1.0, true);
  s.beta = Tensor::zeros({channels}, true);
  s.running_mean = Tensor::zeros({channels});
  s.running_var = Tensor::full({channels}, 1.0);
  return s;
}

Tensor batch_norm2d(const Tensor& input, BatchNormState& state, bool training) {
  require_rank4(input, "batch_norm2d input");
  const int n = input.size(0), c = input.size(1), h = input.size(2), w = input.size(3);
  if (state.gamma.size(0) != c)
    throw ShapeError("batch_norm2d: state has " + std::to_string(state.gamma.size(0)) +
                     " channels, input " + shape_str(input.dims()));
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t m = static_cast<std::size_t>(n) * plane;  // samples per channel
  if (training && m < 2)
    throw ValueError("batch_norm2d: training mode needs N*H*W >= 2, got " + std::to_string(m));

  const double* px = input.data().data();
  const double* pg = state.gamma.data().data();
  const double* pbeta = state.beta.data().data();
  std::vector<double> mean(c), invstd(c);
  if (training) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* row = px + (static_cast<std::size_t>(b) * c + ch) * plane;
        for (std::size_t e = 0; e < plane; ++e) acc += row[e];
      }
      const double mu = acc / static_cast<double>(m);
      double var = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* row = px + (static_cast<std::size_t>(b) * c + ch) * plane;
        for (std::size_t e = 0; e < plane; ++e) {
          const double dlt = row[e] - mu;
          var += dlt * dlt;
        }
      }
      var /= static_cast<double>(m);
      mean[ch] = mu;
      invstd[ch] = 1.0 / std::sqrt(var + state.eps);
      // Running stats: momentum 0.1, unbiased variance estimate.
      const double unbiased = var * static_cast<double>(m) / static_cast<double>(m - 1);
      state.running_mean.mutable_data()[ch] =
          (1.0 - state.momentum) * state.running_mean.data()[ch] + state.momentum * mu;
      state.running_var.mutable_data()[ch] =
          (1.0 - state.momentum) * state.running_var.data()[ch] + state.momentum * unbiased;
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean[ch] = state.running_mean.data()[ch];
      invstd[ch] = 1.0 / std::sqrt(state.running_var.data()[ch] + state.eps);
    }
  }

  const bool track = track_grad({&input, &state.gamma, &state.beta});
  Tensor out = Tensor::zeros(input.dims(), track);
  double* po = out.mutable_data().data();
  std::vector<double> xhat(input.numel());
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
      for (std::size_t e = 0; e < plane; ++e) {
        const double xh = (px[off + e] - mean[ch]) * invstd[ch];
        xhat[off + e] = xh;
        po[off + e] = pg[ch] * xh + pbeta[ch];
      }
    }
  }
  debug_check_finite(out, "batch_norm2d");

  if (track) {
    Tensor gamma = state.gamma;
    Tensor beta = state.beta;
    out.set_node("batch_norm2d", {input, gamma, beta},
                 [input, gamma, beta, xhat = std::move(xhat), invstd = std::move(invstd), training,
                  n, c, plane, m](const Tensor& o) {
                   const double* g = o.grad().data();
                   const double* pg = gamma.data().data();
                   if (gamma.requires_grad() || beta.requires_grad()) {
                     double* ggamma = gamma.requires_grad() ? gamma.grad_accum_buffer() : nullptr;
                     double* gbeta = beta.requires_grad() ? beta.grad_accum_buffer() : nullptr;
                     for (int ch = 0; ch < c; ++ch) {
                       double dg = 0.0, db = 0.0;
                       for (int b = 0; b < n; ++b) {
                         const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
                         for (std::size_t e = 0; e < plane; ++e) {
                           dg += g[off + e] * xhat[off + e];
                           db += g[off + e];
                         }
                       }
                       if (ggamma) ggamma[ch] += dg;
                       if (gbeta) gbeta[ch] += db;
                     }
                   }
                   if (!input.requires_grad()) return;
                   double* gx = input.grad_accum_buffer();
                   if (training) {
                     // Gradient through the batch statistics.
                     for (int ch = 0; ch < c; ++ch) {
                       double s1 = 0.0, s2 = 0.0;
                       for (int b = 0; b < n; ++b) {
                         const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
                         for (std::size_t e = 0; e < plane; ++e) {
                           const double gxh = g[off + e] * pg[ch];
                           s1 += gxh;
                           s2 += gxh * xhat[off + e];
                         }
                       }
                       const double inv_m = 1.0 / static_cast<double>(m);
                       for (int b = 0; b < n; ++b) {
                         const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
                         for (std::size_t e = 0; e < plane; ++e) {
                           const double gxh = g[off + e] * pg[ch];
                           gx[off + e] +=
                               invstd[ch] * (gxh - inv_m * (s1 + xhat[off + e] * s2));
                         }
                       }
                     }
                   } else {
                     for (int ch = 0; ch < c; ++ch) {
                       const double f = pg[ch] * invstd[ch];
                       for (int b = 0; b < n; ++b) {
                         const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
                         for (std::size_t e = 0; e < plane; ++e) gx[off + e] += g[off + e] * f;
                       }
                     }
                   }
                 });
  }
  return out;
}

}  // namespace rega::ops
