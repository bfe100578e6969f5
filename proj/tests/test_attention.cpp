#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "rega/error.hpp"
#include "rega/ops.hpp"
#include "rega/rega_attention.hpp"
#include "rega/retina_mask.hpp"
#include "rega/rng.hpp"

using namespace rega;

namespace {

const RetinaMask& hard_mask() {
  static const RetinaMask m = build_mask(7, 1.75, MaskVariant::HARD);
  return m;
}

Tensor rand_tensor(Rng& rng, Shape dims, double lo = -1.0, double hi = 1.0) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_data(std::move(dims), std::move(v));
}

NetworkConfig small_cfg() {
  NetworkConfig cfg;
  cfg.stage_widths = {8, 8, 8, 8};
  cfg.blocks_per_stage = 1;
  cfg.rg_blocks = 2;
  cfg.num_classes = 4;
  cfg.in_channels = 3;
  cfg.in_h = 16;
  cfg.in_w = 16;
  return cfg;
}

}  // namespace

TEST_CASE("gate matches the input shape and stays in (0,1)") {
  RegaAttentionModule m = make_attention_module(16, 2, hard_mask(), 42);
  Rng rng(1);
  const Tensor f = rand_tensor(rng, {2, 16, 32, 32});
  const Tensor gate = rega_attention(f, m, true);
  REQUIRE(gate.dims() == f.dims());
  for (double v : gate.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("zeroed final normalization gives an exact half gate") {
  RegaAttentionModule m = make_attention_module(4, 2, hard_mask(), 7);
  for (double& v : m.blocks[1].bn.gamma.mutable_data()) v = 0.0;
  for (double& v : m.blocks[1].bn.beta.mutable_data()) v = 0.0;
  Rng rng(2);
  const Tensor f = rand_tensor(rng, {1, 4, 10, 10});
  NoGradGuard ng;
  const Tensor gate = rega_attention(f, m, true);
  for (double v : gate.data()) CHECK(v == 0.5);
  const Tensor out = apply_attention(f, gate);
  for (std::size_t e = 0; e < out.data().size(); ++e) CHECK(out.data()[e] == 0.5 * f.data()[e]);
}

TEST_CASE("gate composition equals the primitive chain") {
  RegaAttentionModule m = make_attention_module(4, 2, hard_mask(), 11);
  Rng rng(3);
  const Tensor f = rand_tensor(rng, {2, 4, 9, 9});
  NoGradGuard ng;
  Tensor h = f;
  for (RGBlock& b : m.blocks)
    h = ops::relu(ops::batch_norm2d(rega_conv(h, b.bank), b.bn, false));
  const Tensor manual = ops::sigmoid(ops::adaptive_avg_pool2d(h, 9, 9));
  const Tensor gate = rega_attention(f, m, false);
  REQUIRE(gate.dims() == manual.dims());
  for (std::size_t e = 0; e < gate.data().size(); ++e)
    CHECK(gate.data()[e] == doctest::Approx(manual.data()[e]).epsilon(1e-12));
}

TEST_CASE("apply_attention validates shapes") {
  CHECK_THROWS_AS(apply_attention(Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 3, 4, 4})),
                  ShapeError);
  CHECK_THROWS_AS(apply_attention(Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 2, 4, 5})),
                  ShapeError);
}

TEST_CASE("gating only attenuates") {
  RegaAttentionModule m = make_attention_module(6, 2, hard_mask(), 13);
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor f = rand_tensor(rng, {2, 6, 12, 12}, -3.0, 3.0);
    NoGradGuard ng;
    const Tensor out = apply_attention(f, rega_attention(f, m, true));
    for (std::size_t e = 0; e < out.data().size(); ++e)
      CHECK(std::fabs(out.data()[e]) <= std::fabs(f.data()[e]));
  }
}

TEST_CASE("fusion output matches the deepest tap") {
  Rng rng(5);
  const Tensor r1 = rand_tensor(rng, {1, 16, 32, 32});
  const Tensor r2 = rand_tensor(rng, {1, 32, 16, 16});
  const Tensor c4 = rand_tensor(rng, {1, 128, 4, 4});
  FusionHead head{rand_tensor(rng, {128, 176, 1, 1}, -0.1, 0.1)};
  NoGradGuard ng;
  const Tensor out = fuse_multiscale(r1, r2, c4, head);
  CHECK(out.dims() == Shape{1, 128, 4, 4});
}

TEST_CASE("identity projection selects the deepest tap") {
  Rng rng(6);
  const Tensor r1 = rand_tensor(rng, {2, 4, 8, 8});
  const Tensor r2 = rand_tensor(rng, {2, 8, 4, 4});
  const Tensor c4 = rand_tensor(rng, {2, 16, 2, 2});
  std::vector<double> w(static_cast<std::size_t>(16) * 28, 0.0);
  for (int o = 0; o < 16; ++o) w[static_cast<std::size_t>(o) * 28 + 12 + o] = 1.0;
  FusionHead head{Tensor::from_data({16, 28, 1, 1}, std::move(w))};
  NoGradGuard ng;
  const Tensor out = fuse_multiscale(r1, r2, c4, head);
  REQUIRE(out.dims() == c4.dims());
  CHECK(out.data() == c4.data());
}

TEST_CASE("fusion composition equals the primitive chain") {
  Rng rng(7);
  const Tensor r1 = rand_tensor(rng, {2, 3, 8, 8});
  const Tensor r2 = rand_tensor(rng, {2, 5, 4, 4});
  const Tensor c4 = rand_tensor(rng, {2, 6, 2, 2});
  FusionHead head{rand_tensor(rng, {6, 14, 1, 1})};
  NoGradGuard ng;
  const Tensor got = fuse_multiscale(r1, r2, c4, head);
  const Tensor manual = ops::conv2d(
      ops::concat_channels({ops::adaptive_avg_pool2d(r1, 2, 2),
                            ops::adaptive_avg_pool2d(r2, 2, 2), c4}),
      head.proj, 1, 0);
  REQUIRE(got.dims() == manual.dims());
  for (std::size_t e = 0; e < got.data().size(); ++e)
    CHECK(got.data()[e] == doctest::Approx(manual.data()[e]).epsilon(1e-12));
}

TEST_CASE("fusion refuses to upsample early taps") {
  FusionHead head{Tensor::zeros({4, 9, 1, 1})};
  CHECK_THROWS_AS(fuse_multiscale(Tensor::zeros({1, 2, 2, 2}), Tensor::zeros({1, 3, 4, 4}),
                                  Tensor::zeros({1, 4, 4, 4}), head),
                  ShapeError);
}

TEST_CASE("config validation catches inconsistent setups") {
  CHECK_NOTHROW(small_cfg().validate());

  NetworkConfig both = small_cfg();
  both.fusion = true;
  both.attention_at = {3};
  CHECK_THROWS_AS(both.validate(), ValueError);

  NetworkConfig tiny = small_cfg();
  tiny.in_h = 4;
  CHECK_THROWS_AS(tiny.validate(), ValueError);

  NetworkConfig even_mask = small_cfg();
  even_mask.mask_size = 6;
  CHECK_THROWS_AS(even_mask.validate(), ValueError);

  NetworkConfig bad_r1 = small_cfg();
  bad_r1.mask_r1 = 3.5;  // == size/2
  CHECK_THROWS_AS(bad_r1.validate(), ValueError);

  NetworkConfig bad_site = small_cfg();
  bad_site.attention_at = {4};
  CHECK_THROWS_AS(bad_site.validate(), ValueError);

  NetworkConfig two_classes = small_cfg();
  two_classes.num_classes = 1;
  CHECK_THROWS_AS(two_classes.validate(), ValueError);
}

TEST_CASE("forward produces finite logits in every mode") {
  Rng rng(8);
  const Tensor x = rand_tensor(rng, {2, 3, 16, 16});

  for (int mode = 0; mode < 3; ++mode) {
    NetworkConfig cfg = small_cfg();
    if (mode == 1) cfg.attention_at = {3};
    if (mode == 2) cfg.fusion = true;
    Model model = build_network(cfg, 99);
    Tensor logits = model.forward(x, true);
    REQUIRE(logits.dims() == Shape{2, 4});
    for (double v : logits.data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("attention at L4 adds exactly the predicted parameters") {
  NetworkConfig base = small_cfg();
  NetworkConfig att = small_cfg();
  att.attention_at = {3};
  const Model mb = build_network(base, 5);
  const Model ma = build_network(att, 5);
  const std::size_t c4 = 8, rg = 2;
  const std::size_t expected = rg * (4 * c4 * c4 + 2 * c4);
  CHECK(ma.params.num_trainable_scalars() - mb.params.num_trainable_scalars() == expected);
}

TEST_CASE("shape closure over the configuration grid") {
  Rng rng(9);
  for (int width : {8, 16}) {
    std::vector<NetworkConfig> grid;
    for (int site = 0; site < 4; ++site) {
      NetworkConfig cfg = small_cfg();
      cfg.stage_widths = {width, width, width, width};
      cfg.rg_blocks = 1;
      cfg.attention_at = {site};
      grid.push_back(cfg);
    }
    NetworkConfig fus = small_cfg();
    fus.stage_widths = {width, width, width, width};
    fus.rg_blocks = 1;
    fus.fusion = true;
    grid.push_back(fus);

    for (NetworkConfig& cfg : grid) {
      Model model = build_network(cfg, 31);
      const Tensor x = rand_tensor(rng, {2, 3, 16, 16});
      Tensor l = model.loss(x, {0, 3}, true);
      REQUIRE(l.dims() == Shape{1});
      CHECK(std::isfinite(l.value()));
      backward(l);
      for (const ParamRegistry::Entry& e : model.params.entries()) {
        if (!e.trainable) continue;
        INFO("missing grad: ", e.name);
        CHECK(e.tensor.has_grad());
      }
    }
  }
}

TEST_CASE("baseline logits ignore the Gabor seed") {
  NetworkConfig cfg = small_cfg();
  Rng rng(10);
  const Tensor x = rand_tensor(rng, {2, 3, 16, 16});
  cfg.gabor_seed = 1111;
  Model a = build_network(cfg, 77);
  cfg.gabor_seed = 2222;
  Model b = build_network(cfg, 77);
  NoGradGuard ng;
  CHECK(a.forward(x, false).data() == b.forward(x, false).data());
}

TEST_CASE("layer tags round-trip") {
  for (int s = 0; s < 4; ++s) CHECK(parse_layer_tag(layer_tag(s)) == s);
  CHECK(parse_layer_tag("L1") == 0);
  CHECK(layer_tag(3) == "L4");
  CHECK_THROWS_AS(parse_layer_tag("L5"), ValueError);
  CHECK_THROWS_AS(parse_layer_tag("stage1"), ValueError);
  CHECK_THROWS_AS(layer_tag(4), ValueError);
}
