#include "rega/rega_attention.hpp"

#include <cmath>

#include "rega/rng.hpp"

namespace rega {

Tensor rg_block_forward(RGBlock& block, const Tensor& x, bool training) {
  return ops::relu(ops::batch_norm2d(rega_conv(x, block.bank), block.bn, training));
}

RegaAttentionModule make_attention_module(int channels, int rg_blocks, const RetinaMask& mask,
                                          std::uint64_t seed) {
  if (rg_blocks < 1) throw ValueError("attention module needs >= 1 RG block");
  RegaAttentionModule m;
  m.blocks.reserve(static_cast<std::size_t>(rg_blocks));
  for (int k = 0; k < rg_blocks; ++k) {
    RGBlock b;
    b.bank = init_bank(channels, channels, mask, derive_seed(seed, "rg" + std::to_string(k)));
    b.bn = ops::BatchNormState::create(channels);
    m.blocks.push_back(std::move(b));
  }
  return m;
}

Tensor rega_attention(const Tensor& f, RegaAttentionModule& module, bool training) {
  if (module.blocks.empty()) throw ValueError("rega_attention: empty module");
  if (f.rank() != 4 || f.size(1) != module.blocks.front().bank.cin)
    throw ShapeError("rega_attention: input " + shape_str(f.dims()) + " does not match bank cin " +
                     std::to_string(module.blocks.front().bank.cin));
  Tensor h = f;
  for (RGBlock& block : module.blocks) h = rg_block_forward(block, h, training);
  // Pool back to the input's own spatial size so the gate product is always
  // well-formed even if the conv padding changes.
  h = ops::adaptive_avg_pool2d(h, f.size(2), f.size(3));
  return ops::sigmoid(h);
}

Tensor apply_attention(const Tensor& f, const Tensor& gate) {
  if (f.dims() != gate.dims())
    throw ShapeError("apply_attention: feature " + shape_str(f.dims()) + " vs gate " +
                     shape_str(gate.dims()));
  return ops::mul(f, gate);
}

Tensor fuse_multiscale(const Tensor& r_c1, const Tensor& r_c2, const Tensor& c4,
                       const FusionHead& head) {
  for (const Tensor* t : {&r_c1, &r_c2, &c4})
    if (t->rank() != 4) throw ShapeError("fuse_multiscale: all inputs must be rank 4");
  if (r_c1.size(0) != c4.size(0) || r_c2.size(0) != c4.size(0))
    throw ShapeError("fuse_multiscale: batch extents differ");
  const int h4 = c4.size(2), w4 = c4.size(3);
  if (r_c1.size(2) < h4 || r_c1.size(3) < w4 || r_c2.size(2) < h4 || r_c2.size(3) < w4)
    throw ShapeError("fuse_multiscale: early taps " + shape_str(r_c1.dims()) + ", " +
                     shape_str(r_c2.dims()) + " cannot be pooled up to " + shape_str(c4.dims()));
  Tensor a = ops::adaptive_avg_pool2d(r_c1, h4, w4);
  Tensor b = ops::adaptive_avg_pool2d(r_c2, h4, w4);
  Tensor cat = ops::concat_channels({a, b, c4});
  return ops::conv2d(cat, head.proj, 1, 0);
}

void NetworkConfig::validate() const {
  for (int wdt : stage_widths)
    if (wdt < 1) throw ValueError("config: stage widths must be positive");
  if (blocks_per_stage < 1) throw ValueError("config: blocks_per_stage must be >= 1");
  if (rg_blocks < 1) throw ValueError("config: rg_blocks must be >= 1");
  if (num_classes < 2) throw ValueError("config: num_classes must be >= 2");
  if (in_channels < 1 || in_h < 8 || in_w < 8)
    throw ValueError("config: input must be at least 1x8x8");
  for (int s : attention_at)
    if (s < 0 || s > 3) throw ValueError("config: attention_at entries must be L1..L4");
  if (fusion && !attention_at.empty())
    throw ValueError("config: fusion and per-stage attention are mutually exclusive");
  if (mask_size < 3 || mask_size % 2 == 0)
    throw ValueError("config: mask size must be odd and >= 3");
  if (!(mask_r1 > 0.0) || !(mask_r1 < mask_size / 2.0))
    throw ValueError("config: mask r1 must lie in (0, size/2)");
}

namespace {

ConvBnUnit make_conv_bn(int cin, int cout, int k, int stride, int pad, Rng& rng) {
  ConvBnUnit u;
  const double stddev = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
  std::vector<double> w(static_cast<std::size_t>(cout) * cin * k * k);
  for (double& v : w) v = rng.normal(0.0, stddev);
  u.weight = Tensor::from_data({cout, cin, k, k}, std::move(w), true);
  u.bn = ops::BatchNormState::create(cout);
  u.stride = stride;
  u.pad = pad;
  return u;
}

void register_conv_bn(ParamRegistry& reg, const std::string& prefix, const std::string& bn_name,
                      const ConvBnUnit& u) {
  reg.add_param(prefix + ".weight", u.weight);
  reg.add_param(bn_name + ".gamma", u.bn.gamma);
  reg.add_param(bn_name + ".beta", u.bn.beta);
  reg.add_buffer(bn_name + ".running_mean", u.bn.running_mean);
  reg.add_buffer(bn_name + ".running_var", u.bn.running_var);
}

void register_attention(ParamRegistry& reg, const std::string& prefix, RegaAttentionModule& m) {
  for (std::size_t k = 0; k < m.blocks.size(); ++k) {
    const std::string rg = prefix + ".rg" + std::to_string(k);
    RGBlock& b = m.blocks[k];
    reg.add_param_clamped(rg + ".omega_raw", b.bank.omega_raw, kGaborRawClampLo, kGaborRawClampHi);
    reg.add_param(rg + ".phi", b.bank.phi);
    reg.add_param_clamped(rg + ".sigma_raw", b.bank.sigma_raw, kGaborRawClampLo, kGaborRawClampHi);
    reg.add_param(rg + ".theta", b.bank.theta);
    reg.add_param(rg + ".bn.gamma", b.bn.gamma);
    reg.add_param(rg + ".bn.beta", b.bn.beta);
    reg.add_buffer(rg + ".bn.running_mean", b.bn.running_mean);
    reg.add_buffer(rg + ".bn.running_var", b.bn.running_var);
  }
}

Tensor residual_forward(ResidualUnit& unit, const Tensor& x, bool training) {
  Tensor h = ops::relu(ops::batch_norm2d(
      ops::conv2d(x, unit.conv1.weight, unit.conv1.stride, unit.conv1.pad), unit.conv1.bn,
      training));
  h = ops::batch_norm2d(ops::conv2d(h, unit.conv2.weight, 1, 1), unit.conv2.bn, training);
  Tensor sc = x;
  if (unit.shortcut)
    sc = ops::batch_norm2d(ops::conv2d(x, unit.shortcut->weight, unit.shortcut->stride, 0),
                           unit.shortcut->bn, training);
  return ops::relu(ops::add(h, sc));
}

}  // namespace

Model build_network(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model model;
  model.cfg = cfg;
  model.mask = build_mask(cfg.mask_size, cfg.mask_r1, cfg.mask_variant);

  Rng rng(derive_seed(seed, "backbone"));
  const std::uint64_t gabor_root =
      cfg.gabor_seed ? cfg.gabor_seed : derive_seed(seed, "gabor");

  int cin = cfg.in_channels;
  for (int s = 0; s < 4; ++s) {
    const int cout = cfg.stage_widths[static_cast<std::size_t>(s)];
    Stage& stage = model.stages[static_cast<std::size_t>(s)];
    for (int u = 0; u < cfg.blocks_per_stage; ++u) {
      const int stride = (u == 0 && s > 0) ? 2 : 1;
      const int unit_cin = (u == 0) ? cin : cout;
      ResidualUnit unit;
      unit.conv1 = make_conv_bn(unit_cin, cout, 3, stride, 1, rng);
      unit.conv2 = make_conv_bn(cout, cout, 3, 1, 1, rng);
      if (stride != 1 || unit_cin != cout)
        unit.shortcut = make_conv_bn(unit_cin, cout, 1, stride, 0, rng);
      stage.units.push_back(std::move(unit));
    }
    cin = cout;
  }

  for (int s : cfg.attention_at) {
    model.attention.emplace(
        s, make_attention_module(cfg.stage_widths[static_cast<std::size_t>(s)], cfg.rg_blocks,
                                 model.mask, derive_seed(gabor_root, layer_tag(s))));
  }

  const int c4 = cfg.stage_widths[3];
  if (cfg.fusion) {
    Model::FusionBranch fb;
    fb.attn_c1 = make_attention_module(cfg.stage_widths[0], cfg.rg_blocks, model.mask,
                                       derive_seed(gabor_root, "C1"));
    fb.attn_c2 = make_attention_module(cfg.stage_widths[1], cfg.rg_blocks, model.mask,
                                       derive_seed(gabor_root, "C2"));
    const int cat_ch = cfg.stage_widths[0] + cfg.stage_widths[1] + c4;
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cat_ch));
    std::vector<double> w(static_cast<std::size_t>(c4) * cat_ch);
    for (double& v : w) v = rng.normal(0.0, stddev);
    fb.head.proj = Tensor::from_data({c4, cat_ch, 1, 1}, std::move(w), true);
    model.fusion = std::move(fb);
  }

  {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(c4));
    std::vector<double> w(static_cast<std::size_t>(cfg.num_classes) * c4);
    for (double& v : w) v = rng.normal(0.0, stddev);
    model.head_w = Tensor::from_data({cfg.num_classes, c4}, std::move(w), true);
    model.head_b = Tensor::zeros({cfg.num_classes}, true);
  }

  // Registration order fixes the checkpoint layout.
  ParamRegistry& reg = model.params;
  for (int s = 0; s < 4; ++s) {
    for (std::size_t u = 0; u < model.stages[static_cast<std::size_t>(s)].units.size(); ++u) {
      const std::string base = "stage" + std::to_string(s + 1) + ".unit" + std::to_string(u);
      ResidualUnit& unit = model.stages[static_cast<std::size_t>(s)].units[u];
      register_conv_bn(reg, base + ".conv1", base + ".bn1", unit.conv1);
      register_conv_bn(reg, base + ".conv2", base + ".bn2", unit.conv2);
      if (unit.shortcut) register_conv_bn(reg, base + ".shortcut", base + ".shortcut_bn", *unit.shortcut);
    }
  }
  for (auto& [s, module] : model.attention)
    register_attention(reg, "attn." + layer_tag(s), module);
  if (model.fusion) {
    register_attention(reg, "fusion.c1", model.fusion->attn_c1);
    register_attention(reg, "fusion.c2", model.fusion->attn_c2);
    reg.add_param("fusion.proj.weight", model.fusion->head.proj);
  }
  reg.add_param("head.weight", model.head_w);
  reg.add_param("head.bias", model.head_b);
  return model;
}

Tensor Model::forward(const Tensor& x, bool training) {
  if (x.rank() != 4 || x.size(1) != cfg.in_channels || x.size(2) != cfg.in_h ||
      x.size(3) != cfg.in_w)
    throw ShapeError("model: input " + shape_str(x.dims()) + " does not match configured " +
                     std::to_string(cfg.in_channels) + "x" + std::to_string(cfg.in_h) + "x" +
                     std::to_string(cfg.in_w));
  Tensor y = x;
  std::array<Tensor, 4> taps;
  for (int s = 0; s < 4; ++s) {
    for (ResidualUnit& unit : stages[static_cast<std::size_t>(s)].units)
      y = residual_forward(unit, y, training);
    taps[static_cast<std::size_t>(s)] = y;
    auto site = attention.find(s);
    if (site != attention.end())
      y = apply_attention(y, rega_attention(y, site->second, training));
  }
  Tensor feat = y;
  if (fusion) {
    Tensor r1 = apply_attention(taps[0], rega_attention(taps[0], fusion->attn_c1, training));
    Tensor r2 = apply_attention(taps[1], rega_attention(taps[1], fusion->attn_c2, training));
    feat = fuse_multiscale(r1, r2, taps[3], fusion->head);
  }
  Tensor pooled = ops::adaptive_avg_pool2d(feat, 1, 1);
  Tensor flat = ops::reshape(pooled, {pooled.size(0), pooled.size(1)});
  return ops::linear(flat, head_w, head_b);
}

Tensor Model::loss(const Tensor& x, const std::vector<int>& labels, bool training) {
  return ops::softmax_cross_entropy(forward(x, training), labels);
}

int parse_layer_tag(const std::string& tag) {
  if (tag.size() == 2 && tag[0] == 'L' && tag[1] >= '1' && tag[1] <= '4') return tag[1] - '1';
  throw ValueError("layer tag must be L1..L4, got '" + tag + "'");
}

std::string layer_tag(int stage) {
  if (stage < 0 || stage > 3) throw ValueError("stage index out of range");
  return "L" + std::to_string(stage + 1);
}

}  // namespace rega
