#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rega/rega_conv.hpp"

namespace rega {

void write_pgm(const std::string& path, int h, int w, const std::vector<std::uint8_t>& pixels);
std::vector<std::uint8_t> read_pgm(const std::string& path, int& h, int& w);

// Min-max normalization to 0..255; a constant slice maps to mid-gray 128.
std::vector<std::uint8_t> normalize_slice(const double* vals, std::size_t n);

// One image per (o, i) kernel slice, named kernel_<layer>_<o>_<i>.pgm.
void export_bank_kernels(const RegaKernelBank& bank, const std::string& layer,
                         const std::string& out_dir);

}  // namespace rega
