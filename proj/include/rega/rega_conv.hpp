#pragma once

#include <cstdint>

#include "rega/gabor.hpp"
#include "rega/retina_mask.hpp"
#include "rega/tensor.hpp"

namespace rega {

// Trainable Gabor quadruples for every (input, output) channel pair plus the
// retina stencil. The masked kernel tensor is rematerialized from the
// parameters on every forward pass.
struct RegaKernelBank {
  int cin = 0;
  int cout = 0;
  int size = 7;
  ChannelMask mask;
  // {cin, cout} leaves; pair (i, o) lives at flat index i*cout + o.
  Tensor omega_raw;
  Tensor phi;
  Tensor sigma_raw;
  Tensor theta;

  GaborParams params_at(int in_ch, int out_ch) const;
};

// (omega, theta) come from the init lattice entry ((o*cin + i) mod 40),
// phi ~ U(0, pi) from the seeded stream, sigma starts at pi/omega so the
// envelope spans roughly one carrier wavelength.
RegaKernelBank init_bank(int cin, int cout, const RetinaMask& mask, std::uint64_t seed);

// Masked kernel tensor {cout, cin, size, size} (OIHW), graph-connected to all
// four parameter leaves. Cells where the mask is 0 are exactly 0.0 and pass
// no gradient.
Tensor build_kernel(const RegaKernelBank& bank);

// conv2d with the bank's kernel, stride 1, padding (size-1)/2: output spatial
// dims equal the input's.
Tensor rega_conv(const Tensor& input, const RegaKernelBank& bank);

}  // namespace rega
