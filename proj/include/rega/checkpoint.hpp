#pragma once

#include <string>

#include "rega/params.hpp"

namespace rega {

// Binary checkpoint, little-endian. Layout:
//   magic "RGKP", version u32, entry count u32, then per entry:
//   name length u16, name bytes, dtype u8 (0 = f32), rank u8, dims u32[rank],
//   payload f32[numel]. Master values are f64 and round to nearest on save.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParamRegistry& params);

// Strict load: the file must contain exactly the registry's entries, same
// names, same order, same shapes. Values are written into the live tensors.
void load_checkpoint(const std::string& path, ParamRegistry& params);

}  // namespace rega
