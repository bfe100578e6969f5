#include "rega/kernels.hpp"

#include <cstring>
#include <vector>

#include "rega/error.hpp"

namespace rega {

ConvDims make_conv_dims(int n, int cin, int h, int w, int cout, int kh, int kw,
                        int stride, int pad) {
  ConvDims d;
  d.n = n;
  d.cin = cin;
  d.h = h;
  d.w = w;
  d.cout = cout;
  d.kh = kh;
  d.kw = kw;
  d.stride = stride;
  d.pad = pad;
  d.oh = (h + 2 * pad - kh) / stride + 1;
  d.ow = (w + 2 * pad - kw) / stride + 1;
  return d;
}

namespace {

// Zero-padded copy of an NCHW buffer, (h+2p) x (w+2p) per channel.
std::vector<double> pad_nchw(const double* in, int n, int c, int h, int w, int pad) {
  const int ph = h + 2 * pad;
  const int pw = w + 2 * pad;
  std::vector<double> out(static_cast<std::size_t>(n) * c * ph * pw, 0.0);
  for (int nc = 0; nc < n * c; ++nc) {
    const double* src = in + static_cast<std::size_t>(nc) * h * w;
    double* dst = out.data() + static_cast<std::size_t>(nc) * ph * pw + pad * pw + pad;
    for (int y = 0; y < h; ++y) std::memcpy(dst + static_cast<std::size_t>(y) * pw, src + static_cast<std::size_t>(y) * w, sizeof(double) * w);
  }
  return out;
}

}  // namespace

namespace kernels {

void conv2d_forward(const double* in, const double* k, double* out, const ConvDims& d) {
  const int ph = d.h + 2 * d.pad;
  const int pw = d.w + 2 * d.pad;
  std::vector<double> padded;
  const double* src = in;
  if (d.pad > 0) {
    padded = pad_nchw(in, d.n, d.cin, d.h, d.w, d.pad);
    src = padded.data();
  }
  const std::size_t in_plane = static_cast<std::size_t>(ph) * pw;
  const std::size_t out_plane = static_cast<std::size_t>(d.oh) * d.ow;
  // Each (n,o) output plane is owned by one thread. Per output element the
  // accumulation order is i, ky, kx ascending regardless of thread count.
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n) {
    for (int o = 0; o < d.cout; ++o) {
      double* oplane = out + (static_cast<std::size_t>(n) * d.cout + o) * out_plane;
      std::memset(oplane, 0, sizeof(double) * out_plane);
      for (int i = 0; i < d.cin; ++i) {
        const double* iplane = src + (static_cast<std::size_t>(n) * d.cin + i) * in_plane;
        const double* kslice = k + (static_cast<std::size_t>(o) * d.cin + i) * d.kh * d.kw;
        for (int ky = 0; ky < d.kh; ++ky) {
          for (int kx = 0; kx < d.kw; ++kx) {
            const double wv = kslice[ky * d.kw + kx];
            if (wv == 0.0) continue;  // masked Rega taps
            for (int y = 0; y < d.oh; ++y) {
              const double* irow = iplane + static_cast<std::size_t>(y * d.stride + ky) * pw + kx;
              double* orow = oplane + static_cast<std::size_t>(y) * d.ow;
              if (d.stride == 1) {
                for (int x = 0; x < d.ow; ++x) orow[x] += wv * irow[x];
              } else {
                for (int x = 0; x < d.ow; ++x) orow[x] += wv * irow[x * d.stride];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const double* gout, const double* k, double* gin, const ConvDims& d) {
  const int ph = d.h + 2 * d.pad;
  const int pw = d.w + 2 * d.pad;
  const std::size_t out_plane = static_cast<std::size_t>(d.oh) * d.ow;
  const std::size_t pad_plane = static_cast<std::size_t>(ph) * pw;
  // Each (n,i) input plane is owned by one thread; scatter goes through a
  // thread-local padded buffer so the border contributions drop out.
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n) {
    for (int i = 0; i < d.cin; ++i) {
      std::vector<double> gpad(pad_plane, 0.0);
      for (int o = 0; o < d.cout; ++o) {
        const double* gplane = gout + (static_cast<std::size_t>(n) * d.cout + o) * out_plane;
        const double* kslice = k + (static_cast<std::size_t>(o) * d.cin + i) * d.kh * d.kw;
        for (int ky = 0; ky < d.kh; ++ky) {
          for (int kx = 0; kx < d.kw; ++kx) {
            const double wv = kslice[ky * d.kw + kx];
            if (wv == 0.0) continue;
            for (int y = 0; y < d.oh; ++y) {
              double* grow = gpad.data() + static_cast<std::size_t>(y * d.stride + ky) * pw + kx;
              const double* gorow = gplane + static_cast<std::size_t>(y) * d.ow;
              if (d.stride == 1) {
                for (int x = 0; x < d.ow; ++x) grow[x] += wv * gorow[x];
              } else {
                for (int x = 0; x < d.ow; ++x) grow[x * d.stride] += wv * gorow[x];
              }
            }
          }
        }
      }
      double* gslice = gin + (static_cast<std::size_t>(n) * d.cin + i) * d.h * d.w;
      for (int y = 0; y < d.h; ++y) {
        const double* src = gpad.data() + static_cast<std::size_t>(y + d.pad) * pw + d.pad;
        double* dst = gslice + static_cast<std::size_t>(y) * d.w;
        for (int x = 0; x < d.w; ++x) dst[x] += src[x];
      }
    }
  }
}

void conv2d_backward_kernel(const double* gout, const double* in, double* gk, const ConvDims& d) {
  const int ph = d.h + 2 * d.pad;
  const int pw = d.w + 2 * d.pad;
  std::vector<double> padded;
  const double* src = in;
  if (d.pad > 0) {
    padded = pad_nchw(in, d.n, d.cin, d.h, d.w, d.pad);
    src = padded.data();
  }
  const std::size_t in_plane = static_cast<std::size_t>(ph) * pw;
  const std::size_t out_plane = static_cast<std::size_t>(d.oh) * d.ow;
  // Each (o,i) kernel slice is owned by one thread; per tap the accumulation
  // order is n, y, x ascending.
#pragma omp parallel for collapse(2) schedule(static)
  for (int o = 0; o < d.cout; ++o) {
    for (int i = 0; i < d.cin; ++i) {
      double* gslice = gk + (static_cast<std::size_t>(o) * d.cin + i) * d.kh * d.kw;
      for (int ky = 0; ky < d.kh; ++ky) {
        for (int kx = 0; kx < d.kw; ++kx) {
          double acc = 0.0;
          for (int n = 0; n < d.n; ++n) {
            const double* gplane = gout + (static_cast<std::size_t>(n) * d.cout + o) * out_plane;
            const double* iplane = src + (static_cast<std::size_t>(n) * d.cin + i) * in_plane;
            for (int y = 0; y < d.oh; ++y) {
              const double* irow = iplane + static_cast<std::size_t>(y * d.stride + ky) * pw + kx;
              const double* gorow = gplane + static_cast<std::size_t>(y) * d.ow;
              if (d.stride == 1) {
                for (int x = 0; x < d.ow; ++x) acc += gorow[x] * irow[x];
              } else {
                for (int x = 0; x < d.ow; ++x) acc += gorow[x] * irow[x * d.stride];
              }
            }
          }
          gslice[ky * d.kw + kx] += acc;
        }
      }
    }
  }
}

void avg_pool_forward(const double* in, double* out, int n, int c, int h, int w,
                      int oh, int ow) {
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < n * c; ++nc) {
    const double* iplane = in + static_cast<std::size_t>(nc) * h * w;
    double* oplane = out + static_cast<std::size_t>(nc) * oh * ow;
    for (int i = 0; i < oh; ++i) {
      const int r0 = i * h / oh;
      const int r1 = (i + 1) * h / oh;
      for (int j = 0; j < ow; ++j) {
        const int c0 = j * w / ow;
        const int c1 = (j + 1) * w / ow;
        double acc = 0.0;
        for (int r = r0; r < r1; ++r)
          for (int cc = c0; cc < c1; ++cc) acc += iplane[static_cast<std::size_t>(r) * w + cc];
        oplane[static_cast<std::size_t>(i) * ow + j] = acc / ((r1 - r0) * (c1 - c0));
      }
    }
  }
}

void avg_pool_backward(const double* gout, double* gin, int n, int c, int h, int w,
                       int oh, int ow) {
  // Bins partition the plane, so scatters from distinct bins never collide.
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < n * c; ++nc) {
    const double* gplane = gout + static_cast<std::size_t>(nc) * oh * ow;
    double* iplane = gin + static_cast<std::size_t>(nc) * h * w;
    for (int i = 0; i < oh; ++i) {
      const int r0 = i * h / oh;
      const int r1 = (i + 1) * h / oh;
      for (int j = 0; j < ow; ++j) {
        const int c0 = j * w / ow;
        const int c1 = (j + 1) * w / ow;
        const double g = gplane[static_cast<std::size_t>(i) * ow + j] / ((r1 - r0) * (c1 - c0));
        for (int r = r0; r < r1; ++r)
          for (int cc = c0; cc < c1; ++cc) iplane[static_cast<std::size_t>(r) * w + cc] += g;
      }
    }
  }
}

}  // namespace kernels
}  // namespace rega
