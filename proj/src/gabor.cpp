#include "rega/gabor.hpp"

#include <cmath>

namespace rega {

double GaborParams::omega() const { return std::exp(omega_raw); }
double GaborParams::sigma() const { return std::exp(sigma_raw); }

GaborParams GaborParams::from_values(double omega, double phi, double sigma, double theta) {
  if (!(omega > 0.0) || !(sigma > 0.0))
    throw ValueError("GaborParams: omega and sigma must be positive");
  GaborParams p;
  p.omega_raw = std::log(omega);
  p.phi = phi;
  p.sigma_raw = std::log(sigma);
  p.theta = theta;
  return p;
}

double gabor_real(double x, double y, const GaborParams& p) {
  const double ct = std::cos(p.theta), st = std::sin(p.theta);
  const double xp = x * ct + y * st;
  const double yp = -x * st + y * ct;
  const double sigma = p.sigma();
  const double env = std::exp(-(xp * xp + yp * yp) / (2.0 * sigma * sigma));
  return env * std::cos(p.omega() * xp + p.phi);
}

GaborGrad gabor_real_grad(double x, double y, const GaborParams& p) {
  const double ct = std::cos(p.theta), st = std::sin(p.theta);
  const double xp = x * ct + y * st;
  const double yp = -x * st + y * ct;
  const double omega = p.omega();
  const double sigma = p.sigma();
  const double r2 = xp * xp + yp * yp;
  const double env = std::exp(-r2 / (2.0 * sigma * sigma));
  const double carg = omega * xp + p.phi;
  const double c = std::cos(carg), s = std::sin(carg);
  GaborGrad g;
  g.value = env * c;
  g.d_omega = -env * s * xp;
  g.d_phi = -env * s;
  g.d_sigma = env * c * r2 / (sigma * sigma * sigma);
  // theta enters only through the carrier: dx'/dtheta = y'.
  g.d_theta = -env * s * omega * yp;
  return g;
}

InitLattice init_lattice() {
  InitLattice lattice;
  lattice.entries.reserve(40);
  for (int n = 1; n <= 5; ++n) {
    const double omega = (M_PI / 2.0) * std::pow(std::sqrt(2.0), -(n - 1));
    for (int m = 1; m <= 8; ++m) {
      InitLattice::Entry e;
      e.n = n;
      e.m = m;
      e.omega = omega;
      e.theta = (M_PI / 8.0) * (m - 1);
      lattice.entries.push_back(e);
    }
  }
  return lattice;
}

static void check_patch_size(int size) {
  if (size < 3 || size % 2 == 0)
    throw ValueError("patch size must be odd and >= 3, got " + std::to_string(size));
}

std::vector<double> sample_patch_values(const GaborParams& p, int size) {
  check_patch_size(size);
  const int c = (size - 1) / 2;
  std::vector<double> out(static_cast<std::size_t>(size) * size);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j)
      out[static_cast<std::size_t>(i) * size + j] =
          gabor_real(static_cast<double>(j - c), static_cast<double>(i - c), p);
  return out;
}

Tensor sample_patch(const Tensor& omega_raw, const Tensor& phi, const Tensor& sigma_raw,
                    const Tensor& theta, int size) {
  check_patch_size(size);
  for (const Tensor* t : {&omega_raw, &phi, &sigma_raw, &theta})
    if (t->numel() != 1)
      throw ShapeError("sample_patch: parameters must be scalars, got " + shape_str(t->dims()));
  GaborParams p;
  p.omega_raw = omega_raw.data()[0];
  p.phi = phi.data()[0];
  p.sigma_raw = sigma_raw.data()[0];
  p.theta = theta.data()[0];

  const bool track = grad_enabled() && (omega_raw.requires_grad() || phi.requires_grad() ||
                                        sigma_raw.requires_grad() || theta.requires_grad());
  Tensor out = Tensor::from_data({size, size}, sample_patch_values(p, size), track);
  debug_check_finite(out, "sample_patch");
  if (track) {
    out.set_node("sample_patch", {omega_raw, phi, sigma_raw, theta},
                 [omega_raw, phi, sigma_raw, theta, p, size](const Tensor& o) {
                   const double* g = o.grad().data();
                   const int c = (size - 1) / 2;
                   const double omega = p.omega(), sigma = p.sigma();
                   double acc_or = 0.0, acc_phi = 0.0, acc_sr = 0.0, acc_theta = 0.0;
                   for (int i = 0; i < size; ++i)
                     for (int j = 0; j < size; ++j) {
                       const GaborGrad gg = gabor_real_grad(j - c, i - c, p);
                       const double u = g[static_cast<std::size_t>(i) * size + j];
                       acc_or += u * gg.d_omega * omega;  // chain through exp()
                       acc_phi += u * gg.d_phi;
                       acc_sr += u * gg.d_sigma * sigma;
                       acc_theta += u * gg.d_theta;
                     }
                   if (omega_raw.requires_grad()) omega_raw.accumulate_grad(&acc_or, 1);
                   if (phi.requires_grad()) phi.accumulate_grad(&acc_phi, 1);
                   if (sigma_raw.requires_grad()) sigma_raw.accumulate_grad(&acc_sr, 1);
                   if (theta.requires_grad()) theta.accumulate_grad(&acc_theta, 1);
                 });
  }
  return out;
}

}  // namespace rega
