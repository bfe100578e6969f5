#include "rega/rega_conv.hpp"

#include <cmath>

#include "rega/ops.hpp"
#include "rega/rng.hpp"

namespace rega {

GaborParams RegaKernelBank::params_at(int in_ch, int out_ch) const {
  if (in_ch < 0 || in_ch >= cin || out_ch < 0 || out_ch >= cout)
    throw ValueError("params_at: channel pair (" + std::to_string(in_ch) + "," +
                     std::to_string(out_ch) + ") outside " + std::to_string(cin) + "x" +
                     std::to_string(cout) + " bank");
  const std::size_t f = static_cast<std::size_t>(in_ch) * cout + out_ch;
  GaborParams p;
  p.omega_raw = omega_raw.data()[f];
  p.phi = phi.data()[f];
  p.sigma_raw = sigma_raw.data()[f];
  p.theta = theta.data()[f];
  return p;
}

RegaKernelBank init_bank(int cin, int cout, const RetinaMask& mask, std::uint64_t seed) {
  if (cin < 1 || cout < 1)
    throw ValueError("init_bank: channel extents must be >= 1");
  RegaKernelBank bank;
  bank.cin = cin;
  bank.cout = cout;
  bank.size = mask.size;
  bank.mask = realize_channels(mask, cin, cout);
  bank.omega_raw = Tensor::zeros({cin, cout}, true);
  bank.phi = Tensor::zeros({cin, cout}, true);
  bank.sigma_raw = Tensor::zeros({cin, cout}, true);
  bank.theta = Tensor::zeros({cin, cout}, true);

  const InitLattice lattice = init_lattice();
  Rng rng(seed);
  double* p_or = bank.omega_raw.mutable_data().data();
  double* p_phi = bank.phi.mutable_data().data();
  double* p_sr = bank.sigma_raw.mutable_data().data();
  double* p_th = bank.theta.mutable_data().data();
  for (int i = 0; i < cin; ++i) {
    for (int o = 0; o < cout; ++o) {
      const std::size_t f = static_cast<std::size_t>(i) * cout + o;
      const auto& entry = lattice.entries[static_cast<std::size_t>(o * cin + i) % 40];
      p_or[f] = std::log(entry.omega);
      p_th[f] = entry.theta;
      p_sr[f] = std::log(M_PI / entry.omega);
      p_phi[f] = rng.uniform(0.0, M_PI);
    }
  }
  return bank;
}

Tensor build_kernel(const RegaKernelBank& bank) {
  const int cin = bank.cin, cout = bank.cout, size = bank.size;
  if (cin < 1) throw ValueError("build_kernel: bank not initialized");
  const int center = (size - 1) / 2;
  const double* mask = bank.mask.base.cells.data();
  const bool track = grad_enabled() && bank.omega_raw.requires_grad();
  Tensor out = Tensor::zeros({cout, cin, size, size}, track);
  double* po = out.mutable_data().data();
  const std::size_t cell_count = static_cast<std::size_t>(size) * size;
#pragma omp parallel for collapse(2) schedule(static)
  for (int o = 0; o < cout; ++o) {
    for (int i = 0; i < cin; ++i) {
      const GaborParams p = bank.params_at(i, o);
      double* slice = po + (static_cast<std::size_t>(o) * cin + i) * cell_count;
      for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
          const std::size_t cell = static_cast<std::size_t>(r) * size + c;
          // Masked cells are written as exact zeros, not products.
          slice[cell] = (mask[cell] == 0.0)
                            ? 0.0
                            : gabor_real(c - center, r - center, p);
        }
    }
  }
  debug_check_finite(out, "build_kernel");
  if (track) {
    Tensor omega_raw = bank.omega_raw, phi = bank.phi, sigma_raw = bank.sigma_raw,
           theta = bank.theta;
    const RegaKernelBank bank_copy = bank;  // shares parameter/mask storage
    out.set_node("build_kernel", {omega_raw, phi, sigma_raw, theta},
                 [bank_copy, omega_raw, phi, sigma_raw, theta, cin, cout, size, center,
                  cell_count](const Tensor& o) {
                   const double* g = o.grad().data();
                   const double* mask = bank_copy.mask.base.cells.data();
                   double* g_or = omega_raw.grad_accum_buffer();
                   double* g_phi = phi.grad_accum_buffer();
                   double* g_sr = sigma_raw.grad_accum_buffer();
                   double* g_th = theta.grad_accum_buffer();
#pragma omp parallel for collapse(2) schedule(static)
                   for (int o_ch = 0; o_ch < cout; ++o_ch) {
                     for (int i_ch = 0; i_ch < cin; ++i_ch) {
                       const GaborParams p = bank_copy.params_at(i_ch, o_ch);
                       const double omega = p.omega(), sigma = p.sigma();
                       const double* gslice =
                           g + (static_cast<std::size_t>(o_ch) * cin + i_ch) * cell_count;
                       double acc_or = 0.0, acc_phi = 0.0, acc_sr = 0.0, acc_th = 0.0;
                       for (int r = 0; r < size; ++r)
                         for (int c = 0; c < size; ++c) {
                           const std::size_t cell = static_cast<std::size_t>(r) * size + c;
                           if (mask[cell] == 0.0) continue;  // constant cells
                           const double u = gslice[cell];
                           if (u == 0.0) continue;
                           const GaborGrad gg = gabor_real_grad(c - center, r - center, p);
                           acc_or += u * gg.d_omega * omega;
                           acc_phi += u * gg.d_phi;
                           acc_sr += u * gg.d_sigma * sigma;
                           acc_th += u * gg.d_theta;
                         }
                       const std::size_t f = static_cast<std::size_t>(i_ch) * cout + o_ch;
                       g_or[f] += acc_or;
                       g_phi[f] += acc_phi;
                       g_sr[f] += acc_sr;
                       g_th[f] += acc_th;
                     }
                   }
                 });
  }
  return out;
}

Tensor rega_conv(const Tensor& input, const RegaKernelBank& bank) {
  if (input.rank() != 4 || input.size(1) != bank.cin)
    throw ShapeError("rega_conv: input " + shape_str(input.dims()) + " does not match bank cin " +
                     std::to_string(bank.cin));
  return ops::conv2d(input, build_kernel(bank), 1, (bank.size - 1) / 2);
}

}  // namespace rega
