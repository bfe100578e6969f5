#pragma once

#include <cstddef>

namespace rega {

// Geometry of one conv2d call. Output extents follow
//   oh = (h + 2*pad - kh)/stride + 1   (floor division), same for ow.
struct ConvDims {
  int n = 1;
  int cin = 1;
  int h = 1;
  int w = 1;
  int cout = 1;
  int kh = 1;
  int kw = 1;
  int stride = 1;
  int pad = 0;
  int oh = 1;
  int ow = 1;
};

ConvDims make_conv_dims(int n, int cin, int h, int w, int cout, int kh, int kw,
                        int stride, int pad);

// OpenMP-parallel kernels. Work is decomposed so that every output (or grad)
// element is owned by exactly one thread and accumulated in a fixed order:
// results are bit-identical for any thread count.
namespace kernels {

// in: n*cin*h*w, k: cout*cin*kh*kw (OIHW), out: n*cout*oh*ow. Overwrites out.
void conv2d_forward(const double* in, const double* k, double* out, const ConvDims& d);

// gout: n*cout*oh*ow; accumulates (+=) into gin (n*cin*h*w).
void conv2d_backward_input(const double* gout, const double* k, double* gin, const ConvDims& d);

// gout: n*cout*oh*ow; accumulates (+=) into gk (cout*cin*kh*kw).
void conv2d_backward_kernel(const double* gout, const double* in, double* gk, const ConvDims& d);

// Bin edges at floor(i*h/oh); requires oh <= h, ow <= w. Overwrites out.
void avg_pool_forward(const double* in, double* out, int n, int c, int h, int w,
                      int oh, int ow);

// Accumulates (+=) into gin.
void avg_pool_backward(const double* gout, double* gin, int n, int c, int h, int w,
                       int oh, int ow);

}  // namespace kernels

// Serial naive implementations: the independent oracles the parallel kernels
// are tested against, also the baseline side of the benchmark. Plain nested
// loops, no OpenMP, kept deliberately separate from the kernels above.
namespace reference {

void conv2d_forward(const double* in, const double* k, double* out, const ConvDims& d);
void conv2d_backward_input(const double* gout, const double* k, double* gin, const ConvDims& d);
void conv2d_backward_kernel(const double* gout, const double* in, double* gk, const ConvDims& d);
void avg_pool_forward(const double* in, double* out, int n, int c, int h, int w,
                      int oh, int ow);

}  // namespace reference

}  // namespace rega
