#pragma once

#include <vector>

#include "rega/tensor.hpp"

namespace rega {

// One trainable Gabor quadruple. Frequency and envelope width are stored as
// logs so gradient steps can never drive them non-positive; omega() and
// sigma() expose the positive values.
struct GaborParams {
  double omega_raw = 0.0;  // omega = exp(omega_raw), rad/pixel
  double phi = 0.0;        // phase, rad
  double sigma_raw = 0.0;  // sigma = exp(sigma_raw), pixels
  double theta = 0.0;      // orientation, rad

  double omega() const;
  double sigma() const;

  // Builds from the positive-domain values.
  static GaborParams from_values(double omega, double phi, double sigma, double theta);
};

// Raw-parameter clamp window keeping exp() in (1e-3, 1e3); applied by the
// optimizer after each step.
inline constexpr double kGaborRawClampLo = -6.907755278982137;  // ln(1e-3)
inline constexpr double kGaborRawClampHi = 6.907755278982137;   // ln(1e3)

// Real part of the Gabor function at pixel offset (x, y):
//   x' = x cos(theta) + y sin(theta),  y' = -x sin(theta) + y cos(theta)
//   g  = exp(-(x'^2 + y'^2) / (2 sigma^2)) * cos(omega x' + phi)
// Bounded in [-1, 1] for all finite inputs.
double gabor_real(double x, double y, const GaborParams& p);

// Value plus partial derivatives w.r.t. the positive-domain parameters.
// Chain through exp() for the raw parameters: d/d_omega_raw = omega * d_omega.
struct GaborGrad {
  double value = 0.0;
  double d_omega = 0.0;
  double d_phi = 0.0;
  double d_sigma = 0.0;
  double d_theta = 0.0;
};
GaborGrad gabor_real_grad(double x, double y, const GaborParams& p);

// The 5-frequency x 8-orientation initialization grid:
//   omega_n = (pi/2) * sqrt(2)^-(n-1),  theta_m = (pi/8) * (m-1).
struct InitLattice {
  struct Entry {
    int n = 1;      // 1..5
    int m = 1;      // 1..8
    double omega = 0.0;
    double theta = 0.0;
  };
  std::vector<Entry> entries;  // 40, ordered by (n-1)*8 + (m-1)
};
InitLattice init_lattice();

// size x size patch with entry (i,j) = gabor_real(j - c, i - c, p),
// c = (size-1)/2: x grows rightward along columns, y downward along rows.
// Plain values, no graph.
std::vector<double> sample_patch_values(const GaborParams& p, int size);

// Graph-connected variant: the four arguments are scalar leaves and receive
// gradients through the returned size x size tensor.
Tensor sample_patch(const Tensor& omega_raw, const Tensor& phi, const Tensor& sigma_raw,
                    const Tensor& theta, int size = 7);

}  // namespace rega
