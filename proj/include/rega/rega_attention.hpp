#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "rega/ops.hpp"
#include "rega/params.hpp"
#include "rega/rega_conv.hpp"

namespace rega {

// RegaConv -> BN -> ReLU, channel-preserving.
struct RGBlock {
  RegaKernelBank bank;
  ops::BatchNormState bn;
};

Tensor rg_block_forward(RGBlock& block, const Tensor& x, bool training);

// Stack of RG blocks followed by pool-to-input-size and sigmoid; produces a
// gate the same shape as the input with every element in (0,1).
struct RegaAttentionModule {
  std::vector<RGBlock> blocks;
};

RegaAttentionModule make_attention_module(int channels, int rg_blocks, const RetinaMask& mask,
                                          std::uint64_t seed);

Tensor rega_attention(const Tensor& f, RegaAttentionModule& module, bool training);

// Elementwise gate application; |output| <= |input| since the gate is in (0,1).
Tensor apply_attention(const Tensor& f, const Tensor& gate);

// 1x1 projection taking [R_C1, R_C2, C4] channels back down to C4's.
struct FusionHead {
  Tensor proj;  // {c4_ch, c1_ch + c2_ch + c4_ch, 1, 1}
};

Tensor fuse_multiscale(const Tensor& r_c1, const Tensor& r_c2, const Tensor& c4,
                       const FusionHead& head);

struct NetworkConfig {
  std::array<int, 4> stage_widths{16, 32, 64, 128};
  int blocks_per_stage = 2;
  std::set<int> attention_at;  // stage indices 0..3 (L1..L4); single-structure mode
  bool fusion = false;         // multi-scale C1/C2 -> C4 mode
  int rg_blocks = 2;
  int num_classes = 8;
  int in_channels = 3;
  int in_h = 32;
  int in_w = 32;
  int mask_size = 7;
  double mask_r1 = 1.75;
  MaskVariant mask_variant = MaskVariant::HARD;
  std::uint64_t gabor_seed = 0;  // 0: derived from the build seed

  void validate() const;
};

// 3x3 conv + BN with optional stride.
struct ConvBnUnit {
  Tensor weight;
  ops::BatchNormState bn;
  int stride = 1;
  int pad = 1;
};

struct ResidualUnit {
  ConvBnUnit conv1;
  ConvBnUnit conv2;
  std::optional<ConvBnUnit> shortcut;  // 1x1 projection when shape changes
};

struct Stage {
  std::vector<ResidualUnit> units;
};

// Four-stage residual backbone with optional Rega attention per stage or the
// multi-scale fusion path, global average pooling and a linear classifier.
struct Model {
  NetworkConfig cfg;
  RetinaMask mask;
  std::array<Stage, 4> stages;
  std::map<int, RegaAttentionModule> attention;  // single-structure sites

  struct FusionBranch {
    RegaAttentionModule attn_c1;
    RegaAttentionModule attn_c2;
    FusionHead head;
  };
  std::optional<FusionBranch> fusion;

  Tensor head_w;  // {num_classes, c4}
  Tensor head_b;  // {num_classes}

  ParamRegistry params;

  Tensor forward(const Tensor& x, bool training);
  Tensor loss(const Tensor& x, const std::vector<int>& labels, bool training);
};

Model build_network(const NetworkConfig& cfg, std::uint64_t seed);

int parse_layer_tag(const std::string& tag);     // "L1".."L4" -> 0..3
std::string layer_tag(int stage);                // 0..3 -> "L1".."L4"

}  // namespace rega
