// Timing comparison of the OpenMP conv kernels against the serial reference
// loops, plus a whole-step benchmark at the training shapes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "rega/kernels.hpp"
#include "rega/rng.hpp"

using rega::ConvDims;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Case {
  const char* name;
  ConvDims d;
};

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_s();
    fn();
    best = std::min(best, now_s() - t0);
  }
  return best;
}

void run_case(const Case& c) {
  const ConvDims& d = c.d;
  rega::Rng rng(42);
  std::vector<double> in(static_cast<std::size_t>(d.n) * d.cin * d.h * d.w);
  std::vector<double> k(static_cast<std::size_t>(d.cout) * d.cin * d.kh * d.kw);
  std::vector<double> out(static_cast<std::size_t>(d.n) * d.cout * d.oh * d.ow);
  std::vector<double> ref_out(out.size());
  std::vector<double> gin(in.size()), gk(k.size());
  for (double& v : in) v = rng.uniform(-1.0, 1.0);
  for (double& v : k) v = rng.uniform(-1.0, 1.0);

  const double macs = 2.0 * d.n * d.cout * d.oh * d.ow * d.cin * d.kh * d.kw;
  const int reps = macs > 5e8 ? 3 : 10;

  const double t_ref = time_best_of(reps, [&] {
    rega::reference::conv2d_forward(in.data(), k.data(), ref_out.data(), d);
  });
  const double t_fwd = time_best_of(reps, [&] {
    rega::kernels::conv2d_forward(in.data(), k.data(), out.data(), d);
  });
  double max_diff = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i)
    max_diff = std::max(max_diff, std::fabs(out[i] - ref_out[i]));

  const double t_bwd_in = time_best_of(reps, [&] {
    std::memset(gin.data(), 0, gin.size() * sizeof(double));
    rega::kernels::conv2d_backward_input(out.data(), k.data(), gin.data(), d);
  });
  const double t_bwd_k = time_best_of(reps, [&] {
    std::memset(gk.data(), 0, gk.size() * sizeof(double));
    rega::kernels::conv2d_backward_kernel(out.data(), in.data(), gk.data(), d);
  });

  std::printf("%-26s fwd %8.3f ms (ref %8.3f ms, x%5.2f, %5.2f GF)  bwd_in %8.3f ms  bwd_k %8.3f ms  diff %.1e\n",
              c.name, t_fwd * 1e3, t_ref * 1e3, t_ref / t_fwd, macs / t_fwd * 1e-9,
              t_bwd_in * 1e3, t_bwd_k * 1e3, max_diff);
}

}  // namespace

int main() {
  const Case cases[] = {
      {"3x3 s1 16ch 32px b16", rega::make_conv_dims(16, 16, 32, 32, 16, 3, 3, 1, 1)},
      {"3x3 s2 32ch 32px b16", rega::make_conv_dims(16, 16, 32, 32, 32, 3, 3, 2, 1)},
      {"3x3 s1 64ch 8px b16", rega::make_conv_dims(16, 64, 8, 8, 64, 3, 3, 1, 1)},
      {"7x7 s1 pad3 64ch 8px", rega::make_conv_dims(16, 64, 8, 8, 64, 7, 7, 1, 3)},
      {"7x7 s1 pad3 64ch 4px", rega::make_conv_dims(16, 64, 4, 4, 64, 7, 7, 1, 3)},
      {"1x1 s1 208->64 4px", rega::make_conv_dims(16, 208, 4, 4, 64, 1, 1, 1, 0)},
  };
  for (const Case& c : cases) run_case(c);
  return 0;
}
