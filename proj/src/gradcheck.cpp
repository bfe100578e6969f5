#include "rega/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <map>

#include "rega/error.hpp"
#include "rega/gabor.hpp"
#include "rega/ops.hpp"
#include "rega/rega_attention.hpp"
#include "rega/rng.hpp"

namespace rega {

bool GradCheckReport::all_pass() const {
  if (entries.empty()) return false;
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

std::string GradCheckReport::to_string() const {
  std::string out = "group                        probes  max_rel_err  status\n";
  char buf[128];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%-28s %6d  %11.3e  %s\n", e.group.c_str(), e.probes,
                  e.max_rel_err, e.pass ? "pass" : "FAIL");
    out += buf;
  }
  return out;
}

namespace {

double rel_err(double analytic, double fd) {
  return std::fabs(analytic - fd) / std::max(1.0, std::fabs(analytic));
}

// Accumulates worst-case relative error per named group.
class Collector {
 public:
  explicit Collector(double tol) : tol_(tol) {}

  void add(const std::string& group, double analytic, double fd) {
    Bucket& b = buckets_[group];
    ++b.probes;
    if (!std::isfinite(fd) || !std::isfinite(analytic)) {
      b.broken = true;
      return;
    }
    b.max_rel = std::max(b.max_rel, rel_err(analytic, fd));
  }

  GradCheckReport report() const {
    GradCheckReport r;
    for (const auto& [group, b] : buckets_) {
      GradCheckEntry e;
      e.group = group;
      e.probes = b.probes;
      e.max_rel_err = b.broken ? std::numeric_limits<double>::infinity() : b.max_rel;
      e.pass = !b.broken && b.max_rel <= tol_;
      r.entries.push_back(e);
    }
    return r;
  }

 private:
  struct Bucket {
    int probes = 0;
    double max_rel = 0.0;
    bool broken = false;
  };
  double tol_;
  std::map<std::string, Bucket> buckets_;
};

double central_diff(const Tensor& leaf, std::size_t k, double h,
                    const std::function<double()>& eval) {
  std::vector<double>& d = leaf.mutable_data();
  const double keep = d[k];
  d[k] = keep + h;
  const double fp = eval();
  d[k] = keep - h;
  const double fm = eval();
  d[k] = keep;
  return (fp - fm) / (2.0 * h);
}

}  // namespace

GradCheckReport gradcheck_gabor(std::uint64_t seed, int draws, double h, double tol) {
  Rng rng(seed);
  Collector col(tol);
  for (int d = 0; d < draws; ++d) {
    GaborParams p;
    p.omega_raw = rng.uniform(-1.6, 1.1);
    p.phi = rng.uniform(0.0, 2.0 * M_PI);
    p.sigma_raw = rng.uniform(-0.2, 1.4);
    p.theta = rng.uniform(0.0, 2.0 * M_PI);
    const double x = rng.uniform(-3.0, 3.0);
    const double y = rng.uniform(-3.0, 3.0);
    const GaborGrad g = gabor_real_grad(x, y, p);

    auto fd_raw = [&](double GaborParams::* field) {
      GaborParams q = p;
      q.*field += h;
      const double fp = gabor_real(x, y, q);
      q.*field -= 2.0 * h;
      const double fm = gabor_real(x, y, q);
      return (fp - fm) / (2.0 * h);
    };
    col.add("gabor.omega_raw", g.d_omega * p.omega(), fd_raw(&GaborParams::omega_raw));
    col.add("gabor.phi", g.d_phi, fd_raw(&GaborParams::phi));
    col.add("gabor.sigma_raw", g.d_sigma * p.sigma(), fd_raw(&GaborParams::sigma_raw));
    col.add("gabor.theta", g.d_theta, fd_raw(&GaborParams::theta));
  }
  return col.report();
}

GradCheckReport gradcheck_kernel(std::uint64_t seed, double h, double tol) {
  Rng rng(seed);
  const RetinaMask mask = build_mask(7, 1.75, MaskVariant::HARD);
  RegaKernelBank bank = init_bank(2, 3, mask, mix_seed(seed));
  std::vector<double> wv(bank.cin * bank.cout * 49ull);
  for (double& v : wv) v = rng.uniform(-1.0, 1.0);
  const Tensor w = Tensor::from_data({bank.cout, bank.cin, 7, 7}, std::move(wv));

  auto loss_value = [&]() {
    NoGradGuard ng;
    return ops::sum(ops::mul(build_kernel(bank), w)).value();
  };
  Tensor loss = ops::sum(ops::mul(build_kernel(bank), w));
  backward(loss);

  Collector col(tol);
  const struct {
    const char* name;
    const Tensor* t;
  } leaves[] = {{"kernel.omega_raw", &bank.omega_raw},
                {"kernel.phi", &bank.phi},
                {"kernel.sigma_raw", &bank.sigma_raw},
                {"kernel.theta", &bank.theta}};
  for (const auto& leaf : leaves)
    for (std::size_t k = 0; k < leaf.t->numel(); ++k)
      col.add(leaf.name, leaf.t->grad()[k], central_diff(*leaf.t, k, h, loss_value));
  return col.report();
}

GradCheckReport gradcheck_ops(std::uint64_t seed, double h, double tol) {
  Rng rng(seed);
  Collector col(tol);
  auto rand_vec = [&](std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
  };

  {  // conv -> sigmoid -> sum
    Tensor x = Tensor::from_data({1, 1, 5, 5}, rand_vec(25, -1.0, 1.0), true);
    Tensor k = Tensor::from_data({2, 1, 3, 3}, rand_vec(18, -1.0, 1.0), true);
    auto make = [&] { return ops::sum(ops::sigmoid(ops::conv2d(x, k, 1, 1))); };
    Tensor loss = make();
    backward(loss);
    auto value = [&] {
      NoGradGuard ng;
      return make().value();
    };
    for (std::size_t i = 0; i < x.numel(); ++i)
      col.add("ops.conv.input", x.grad()[i], central_diff(x, i, h, value));
    for (std::size_t i = 0; i < k.numel(); ++i)
      col.add("ops.conv.kernel", k.grad()[i], central_diff(k, i, h, value));
  }

  {  // batch norm, training mode, backward through batch statistics
    Tensor x = Tensor::from_data({2, 3, 4, 4}, rand_vec(96, -2.0, 2.0), true);
    ops::BatchNormState bn = ops::BatchNormState::create(3);
    bn.gamma.mutable_data() = rand_vec(3, 0.5, 1.5);
    bn.beta.mutable_data() = rand_vec(3, -0.5, 0.5);
    const Tensor w = Tensor::from_data({2, 3, 4, 4}, rand_vec(96, -1.0, 1.0));
    auto make = [&] { return ops::sum(ops::mul(ops::batch_norm2d(x, bn, true), w)); };
    Tensor loss = make();
    backward(loss);
    auto value = [&] {
      NoGradGuard ng;
      return make().value();
    };
    for (std::size_t i = 0; i < x.numel(); ++i)
      col.add("ops.bn.input", x.grad()[i], central_diff(x, i, h, value));
    for (std::size_t i = 0; i < 3; ++i)
      col.add("ops.bn.gamma", bn.gamma.grad()[i], central_diff(bn.gamma, i, h, value));
    for (std::size_t i = 0; i < 3; ++i)
      col.add("ops.bn.beta", bn.beta.grad()[i], central_diff(bn.beta, i, h, value));
  }

  {  // adaptive average pooling
    Tensor x = Tensor::from_data({1, 2, 5, 5}, rand_vec(50, -1.0, 1.0), true);
    const Tensor w = Tensor::from_data({1, 2, 2, 2}, rand_vec(8, -1.0, 1.0));
    auto make = [&] { return ops::sum(ops::mul(ops::adaptive_avg_pool2d(x, 2, 2), w)); };
    Tensor loss = make();
    backward(loss);
    auto value = [&] {
      NoGradGuard ng;
      return make().value();
    };
    for (std::size_t i = 0; i < x.numel(); ++i)
      col.add("ops.pool.input", x.grad()[i], central_diff(x, i, h, value));
  }

  {  // linear + softmax cross-entropy
    Tensor x = Tensor::from_data({3, 6}, rand_vec(18, -1.0, 1.0), true);
    Tensor w = Tensor::from_data({4, 6}, rand_vec(24, -0.7, 0.7), true);
    Tensor b = Tensor::from_data({4}, rand_vec(4, -0.2, 0.2), true);
    const std::vector<int> labels = {2, 0, 3};
    auto make = [&] { return ops::softmax_cross_entropy(ops::linear(x, w, b), labels); };
    Tensor loss = make();
    backward(loss);
    auto value = [&] {
      NoGradGuard ng;
      return make().value();
    };
    for (std::size_t i = 0; i < x.numel(); ++i)
      col.add("ops.linear.input", x.grad()[i], central_diff(x, i, h, value));
    for (std::size_t i = 0; i < w.numel(); ++i)
      col.add("ops.linear.weight", w.grad()[i], central_diff(w, i, h, value));
    for (std::size_t i = 0; i < b.numel(); ++i)
      col.add("ops.linear.bias", b.grad()[i], central_diff(b, i, h, value));
  }

  return col.report();
}

namespace {

// Shared by the two end-to-end targets: probe random Gabor coordinates plus a
// few backbone/head coordinates of a freshly built micro-network.
GradCheckReport micro_net_check(NetworkConfig cfg, std::uint64_t seed, int gabor_probes, double h,
                                double tol, const std::string& prefix) {
  Model model = build_network(cfg, derive_seed(seed, "gradcheck-model"));
  Rng rng(derive_seed(seed, "gradcheck-data"));
  std::vector<double> xv(static_cast<std::size_t>(cfg.in_channels) * cfg.in_h * cfg.in_w);
  for (double& v : xv) v = rng.uniform(0.0, 1.0);
  const Tensor x = Tensor::from_data({1, cfg.in_channels, cfg.in_h, cfg.in_w}, std::move(xv));
  const std::vector<int> labels = {static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.num_classes)))};

  Tensor loss = model.loss(x, labels, true);
  backward(loss);
  auto value = [&] {
    NoGradGuard ng;
    return model.loss(x, labels, true).value();
  };

  struct Site {
    std::string group;
    Tensor t;
  };
  std::vector<Site> gabor_sites;
  for (const auto& e : model.params.entries()) {
    if (!e.trainable || e.name.find(".rg") == std::string::npos) continue;
    for (const char* suffix : {"omega_raw", "phi", "sigma_raw", "theta"})
      if (e.name.size() > std::strlen(suffix) &&
          e.name.compare(e.name.size() - std::strlen(suffix), std::string::npos, suffix) == 0)
        gabor_sites.push_back({prefix + "." + suffix, e.tensor});
  }
  if (gabor_sites.empty()) throw Error("gradcheck: network has no Gabor leaves");

  Collector col(tol);
  for (int p = 0; p < gabor_probes; ++p) {
    const Site& s = gabor_sites[rng.below(gabor_sites.size())];
    const std::size_t k = rng.below(s.t.numel());
    col.add(s.group, s.t.grad()[k], central_diff(s.t, k, h, value));
  }
  for (const char* name : {"stage1.unit0.conv1.weight", "stage4.unit0.bn2.gamma", "head.weight"}) {
    const Tensor t = model.params.at(name).tensor;
    for (int p = 0; p < 4; ++p) {
      const std::size_t k = rng.below(t.numel());
      col.add(prefix + ".backbone", t.grad()[k], central_diff(t, k, h, value));
    }
  }
  return col.report();
}

}  // namespace

GradCheckReport gradcheck_network(std::uint64_t seed, int gabor_probes, double h, double tol) {
  NetworkConfig cfg;
  cfg.stage_widths = {8, 8, 8, 8};
  cfg.blocks_per_stage = 1;
  cfg.attention_at = {3};
  cfg.rg_blocks = 2;
  cfg.num_classes = 4;
  cfg.in_channels = 3;
  cfg.in_h = 16;
  cfg.in_w = 16;
  return micro_net_check(cfg, seed, gabor_probes, h, tol, "network");
}

GradCheckReport gradcheck_fusion(std::uint64_t seed, int gabor_probes, double h, double tol) {
  NetworkConfig cfg;
  cfg.stage_widths = {8, 8, 8, 8};
  cfg.blocks_per_stage = 1;
  cfg.fusion = true;
  cfg.rg_blocks = 1;
  cfg.num_classes = 4;
  cfg.in_channels = 3;
  cfg.in_h = 16;
  cfg.in_w = 16;
  return micro_net_check(cfg, seed, gabor_probes, h, tol, "fusion");
}

GradCheckReport run_gradcheck(const std::string& target, std::uint64_t seed) {
  if (target == "gabor") return gradcheck_gabor(seed);
  if (target == "kernel") return gradcheck_kernel(seed);
  if (target == "ops") return gradcheck_ops(seed);
  if (target == "network") return gradcheck_network(seed);
  if (target == "fusion") return gradcheck_fusion(seed);
  if (target == "all") {
    GradCheckReport all;
    for (const char* t : {"gabor", "kernel", "ops", "network", "fusion"}) {
      GradCheckReport r = run_gradcheck(t, seed);
      all.entries.insert(all.entries.end(), r.entries.begin(), r.entries.end());
    }
    return all;
  }
  throw ValueError("gradcheck: unknown target '" + target +
                   "' (expected gabor|kernel|ops|network|fusion|all)");
}

}  // namespace rega
