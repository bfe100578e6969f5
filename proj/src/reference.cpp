#include "rega/kernels.hpp"

#include <cstring>

// Naive single-threaded transcriptions of the kernel definitions. These are
// the oracles the OpenMP kernels are checked against, so they must stay
// independent: straight nested loops, bounds-checked zero padding, no shared
// helpers with kernels.cpp.
namespace rega::reference {

void conv2d_forward(const double* in, const double* k, double* out, const ConvDims& d) {
  for (int n = 0; n < d.n; ++n)
    for (int o = 0; o < d.cout; ++o)
      for (int y = 0; y < d.oh; ++y)
        for (int x = 0; x < d.ow; ++x) {
          double acc = 0.0;
          for (int i = 0; i < d.cin; ++i)
            for (int dy = 0; dy < d.kh; ++dy)
              for (int dx = 0; dx < d.kw; ++dx) {
                const int iy = y * d.stride - d.pad + dy;
                const int ix = x * d.stride - d.pad + dx;
                if (iy < 0 || iy >= d.h || ix < 0 || ix >= d.w) continue;
                acc += in[((static_cast<std::size_t>(n) * d.cin + i) * d.h + iy) * d.w + ix] *
                       k[((static_cast<std::size_t>(o) * d.cin + i) * d.kh + dy) * d.kw + dx];
              }
          out[((static_cast<std::size_t>(n) * d.cout + o) * d.oh + y) * d.ow + x] = acc;
        }
}

void conv2d_backward_input(const double* gout, const double* k, double* gin, const ConvDims& d) {
  for (int n = 0; n < d.n; ++n)
    for (int o = 0; o < d.cout; ++o)
      for (int y = 0; y < d.oh; ++y)
        for (int x = 0; x < d.ow; ++x) {
          const double g = gout[((static_cast<std::size_t>(n) * d.cout + o) * d.oh + y) * d.ow + x];
          for (int i = 0; i < d.cin; ++i)
            for (int dy = 0; dy < d.kh; ++dy)
              for (int dx = 0; dx < d.kw; ++dx) {
                const int iy = y * d.stride - d.pad + dy;
                const int ix = x * d.stride - d.pad + dx;
                if (iy < 0 || iy >= d.h || ix < 0 || ix >= d.w) continue;
                gin[((static_cast<std::size_t>(n) * d.cin + i) * d.h + iy) * d.w + ix] +=
                    g * k[((static_cast<std::size_t>(o) * d.cin + i) * d.kh + dy) * d.kw + dx];
              }
        }
}

void conv2d_backward_kernel(const double* gout, const double* in, double* gk, const ConvDims& d) {
  for (int n = 0; n < d.n; ++n)
    for (int o = 0; o < d.cout; ++o)
      for (int y = 0; y < d.oh; ++y)
        for (int x = 0; x < d.ow; ++x) {
          const double g = gout[((static_cast<std::size_t>(n) * d.cout + o) * d.oh + y) * d.ow + x];
          for (int i = 0; i < d.cin; ++i)
            for (int dy = 0; dy < d.kh; ++dy)
              for (int dx = 0; dx < d.kw; ++dx) {
                const int iy = y * d.stride - d.pad + dy;
                const int ix = x * d.stride - d.pad + dx;
                if (iy < 0 || iy >= d.h || ix < 0 || ix >= d.w) continue;
                gk[((static_cast<std::size_t>(o) * d.cin + i) * d.kh + dy) * d.kw + dx] +=
                    g * in[((static_cast<std::size_t>(n) * d.cin + i) * d.h + iy) * d.w + ix];
              }
        }
}

void avg_pool_forward(const double* in, double* out, int n, int c, int h, int w,
                      int oh, int ow) {
  for (int nc = 0; nc < n * c; ++nc)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        const int r0 = i * h / oh;
        const int r1 = (i + 1) * h / oh;
        const int c0 = j * w / ow;
        const int c1 = (j + 1) * w / ow;
        double acc = 0.0;
        for (int r = r0; r < r1; ++r)
          for (int cc = c0; cc < c1; ++cc)
            acc += in[(static_cast<std::size_t>(nc) * h + r) * w + cc];
        out[(static_cast<std::size_t>(nc) * oh + i) * ow + j] = acc / ((r1 - r0) * (c1 - c0));
      }
}

}  // namespace rega::reference
