#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rega/checkpoint.hpp"
#include "rega/config.hpp"
#include "rega/dataset.hpp"
#include "rega/error.hpp"
#include "rega/gradcheck.hpp"
#include "rega/ops.hpp"
#include "rega/optimizer.hpp"
#include "rega/pgm.hpp"
#include "rega/rng.hpp"
#include "rega/train.hpp"

using namespace rega;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("rega_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

NetworkConfig tiny_net() {
  NetworkConfig net;
  net.stage_widths = {4, 4, 4, 4};
  net.blocks_per_stage = 1;
  net.rg_blocks = 1;
  net.num_classes = 8;
  net.in_channels = 1;
  net.in_h = 16;
  net.in_w = 16;
  return net;
}

TrainConfig tiny_train() {
  TrainConfig cfg;
  cfg.net = tiny_net();
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.sgd.lr = 0.05;
  cfg.data.train_per_class = 8;
  cfg.data.val_per_class = 2;
  return cfg;
}

}  // namespace

TEST_CASE("sgd follows the momentum recurrence") {
  ParamRegistry reg;
  Tensor w = Tensor::from_data({1}, {0.9}, true);
  reg.add_param("w", w);
  SgdConfig cfg;
  cfg.lr = 0.1;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  Sgd opt(reg, cfg);

  backward(ops::sum(w));  // grad 1
  opt.step(0);            // v=1, w=0.9-0.1
  CHECK(w.data()[0] == doctest::Approx(0.8).epsilon(1e-14));
  for (double g : w.grad()) CHECK(g == 0.0);  // step zeroes grads

  backward(ops::sum(w));  // grad 1
  opt.step(0);            // v=0.9+1=1.9, w=0.8-0.19
  CHECK(w.data()[0] == doctest::Approx(0.61).epsilon(1e-14));
}

TEST_CASE("weight decay enters through the gradient") {
  ParamRegistry reg;
  Tensor w = Tensor::from_data({1}, {1.0}, true);
  reg.add_param("w", w);
  SgdConfig cfg;
  cfg.lr = 0.1;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.5;
  Sgd opt(reg, cfg);
  backward(ops::sum(w));  // grad 1, +wd*w = 1.5
  opt.step(0);
  CHECK(w.data()[0] == doctest::Approx(0.85).epsilon(1e-14));
}

TEST_CASE("learning rate decays by tens") {
  SgdConfig cfg;
  cfg.lr = 0.01;
  cfg.lr_step = 30;
  CHECK(lr_at(cfg, 0) == 0.01);
  CHECK(lr_at(cfg, 29) == 0.01);
  CHECK(lr_at(cfg, 30) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(lr_at(cfg, 59) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(lr_at(cfg, 60) == doctest::Approx(0.0001).epsilon(1e-12));
  CHECK(lr_at(cfg, 90) == doctest::Approx(0.00001).epsilon(1e-12));

  ParamRegistry reg;
  Tensor w = Tensor::from_data({1}, {0.5}, true);
  reg.add_param("w", w);
  SgdConfig c2;
  c2.lr = 0.1;
  c2.momentum = 0.0;
  c2.weight_decay = 0.0;
  c2.lr_step = 30;
  Sgd opt(reg, c2);
  backward(ops::sum(w));
  opt.step(30);  // effective lr 0.01
  CHECK(w.data()[0] == doctest::Approx(0.49).epsilon(1e-14));
}

TEST_CASE("missing gradients abort the step with names") {
  ParamRegistry reg;
  Tensor a = Tensor::from_data({1}, {1.0}, true);
  Tensor b = Tensor::from_data({1}, {2.0}, true);
  reg.add_param("alpha", a);
  reg.add_param("beta", b);
  Sgd opt(reg, SgdConfig{});
  backward(ops::sum(a));
  try {
    opt.step(0);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("missing grad") != std::string::npos);
    CHECK(msg.find("beta") != std::string::npos);
    CHECK(msg.find("alpha") == std::string::npos);
  }
}

TEST_CASE("clamped entries stay inside their window") {
  ParamRegistry reg;
  Tensor w = Tensor::from_data({2}, {0.4, -0.4}, true);
  reg.add_param_clamped("w", w, -0.5, 0.5);
  SgdConfig cfg;
  cfg.lr = 0.1;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.0;
  Sgd opt(reg, cfg);
  // push both entries far outside the window
  backward(ops::sum(ops::mul(w, Tensor::from_data({2}, {-100.0, 100.0}))));
  opt.step(0);
  CHECK(w.data()[0] == 0.5);
  CHECK(w.data()[1] == -0.5);
}

TEST_CASE("momentum sgd drives a quadratic bowl to its minimum") {
  ParamRegistry reg;
  Tensor w = Tensor::from_data({4}, {5.0, -3.0, 2.0, 0.5}, true);
  reg.add_param("w", w);
  const Tensor neg_t = Tensor::from_data({4}, {-1.0, -2.0, 1.0, 0.0});
  SgdConfig cfg;
  cfg.lr = 0.1;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  Sgd opt(reg, cfg);
  for (int i = 0; i < 500; ++i) {
    Tensor diff = ops::add(w, neg_t);
    backward(ops::sum(ops::mul(diff, diff)));
    opt.step(0);
  }
  const std::vector<double> target = {1.0, 2.0, -1.0, 0.0};
  for (int i = 0; i < 4; ++i)
    CHECK(std::fabs(w.data()[static_cast<std::size_t>(i)] - target[static_cast<std::size_t>(i)]) <
          1e-6);
}

TEST_CASE("config files parse comments, blanks and overrides") {
  Config cfg = Config::from_string(
      "# full line comment\n"
      "train.lr = 0.05\n"
      "net.fusion=true   # trailing comment\n"
      "\n"
      "  net.stage_widths = 8, 16,32 ,64  \n"
      "data.source=synthetic\n");
  CHECK(cfg.get_double("train.lr", 0.0) == 0.05);
  CHECK(cfg.get_bool("net.fusion", false));
  CHECK(cfg.get_int_list("net.stage_widths", {}) == std::vector<int>{8, 16, 32, 64});
  CHECK(cfg.get_str("data.source", "") == "synthetic");
  CHECK(cfg.get_int("train.epochs", 7) == 7);  // fallback
  cfg.set("train.lr", "0.25");                 // CLI-style override wins
  CHECK(cfg.get_double("train.lr", 0.0) == 0.25);
  CHECK(cfg.has("net.fusion"));
  CHECK_FALSE(cfg.has("nope"));
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS_AS(Config::from_string("just a bare token\n"), ValueError);
  Config cfg = Config::from_string("train.lr=abc\nnet.widths=1,x\n");
  CHECK_THROWS_AS(cfg.get_double("train.lr", 0.0), ValueError);
  CHECK_THROWS_AS(cfg.get_int_list("net.widths", {}), ValueError);
  CHECK_THROWS_AS(cfg.require_known({"train.lr"}), ValueError);
  CHECK_NOTHROW(cfg.require_known({"train.lr", "net.widths"}));
}

TEST_CASE("train_config_from maps every section") {
  Config cfg = Config::from_string(
      "train.lr=0.02\n"
      "train.epochs=3\n"
      "train.batch_size=8\n"
      "train.seed=42\n"
      "net.stage_widths=8,8,8,8\n"
      "net.blocks_per_stage=1\n"
      "net.attention_at=L4\n"
      "net.num_classes=4\n"
      "net.in_channels=1\n"
      "net.in_h=16\n"
      "net.in_w=16\n"
      "mask.size=5\n"
      "mask.r1=1.25\n"
      "mask.variant=soft\n"
      "data.amplitude=0.1\n");
  TrainConfig tc = train_config_from(cfg);
  CHECK(tc.sgd.lr == 0.02);
  CHECK(tc.epochs == 3);
  CHECK(tc.batch_size == 8);
  CHECK(tc.seed == 42);
  CHECK(tc.net.stage_widths == std::array<int, 4>{8, 8, 8, 8});
  CHECK(tc.net.attention_at == std::set<int>{3});
  CHECK(tc.net.num_classes == 4);
  CHECK(tc.net.mask_size == 5);
  CHECK(tc.net.mask_r1 == 1.25);
  CHECK(tc.net.mask_variant == MaskVariant::SOFT);
  CHECK(tc.data.amplitude == 0.1);
  CHECK_NOTHROW(tc.validate());

  CHECK_THROWS_AS(train_config_from(Config::from_string("net.stage_widths=8,8\n")), ValueError);
  CHECK_THROWS_AS(train_config_from(Config::from_string("mask.variant=fuzzy\n")), ValueError);
  CHECK_THROWS_AS(train_config_from(Config::from_string("net.attention_at=L9\n")), ValueError);
  CHECK_THROWS_AS(train_config_from(Config::from_string("definitely.unknown=1\n")), ValueError);
}

TEST_CASE("train config validation") {
  TrainConfig cfg = tiny_train();
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = tiny_train();
  cfg.data.source = "csv";
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = tiny_train();
  cfg.data.source = "idx";  // no paths
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = tiny_train();
  cfg.sgd.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
}

TEST_CASE("label_rank breaks ties toward the lower index") {
  const double logits[4] = {1.0, 3.0, 3.0, 2.0};
  CHECK(label_rank(logits, 4, 1) == 0);
  CHECK(label_rank(logits, 4, 2) == 1);
  CHECK(label_rank(logits, 4, 3) == 2);
  CHECK(label_rank(logits, 4, 0) == 3);
  const double flat[3] = {0.0, 0.0, 0.0};
  CHECK(label_rank(flat, 3, 0) == 0);
  CHECK(label_rank(flat, 3, 2) == 2);
}

TEST_CASE("synthetic gratings are deterministic and balanced") {
  const DatasetHandle a = gen_synthetic(11, 5);
  const DatasetHandle b = gen_synthetic(11, 5);
  const DatasetHandle c = gen_synthetic(12, 5);
  CHECK(a.images == b.images);
  CHECK(a.labels == b.labels);
  CHECK(a.images != c.images);
  CHECK(a.n == 40);
  CHECK(a.num_classes == 8);
  CHECK(a.channels == 1);
  CHECK(a.height == 32);
  for (int i = 0; i < a.n; ++i) CHECK(a.labels[static_cast<std::size_t>(i)] == i / 5);
  for (double v : a.images) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const DatasetHandle rgb = gen_synthetic(11, 2, 8, 16, 3);
  const std::size_t plane = 16 * 16;
  for (int i = 0; i < rgb.n; ++i)
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t base = static_cast<std::size_t>(i) * 3 * plane;
      CHECK(rgb.images[base + p] == rgb.images[base + plane + p]);
      CHECK(rgb.images[base + p] == rgb.images[base + 2 * plane + p]);
    }
}

TEST_CASE("each class carries energy at its own orientation") {
  const int npc = 6, classes = 8, size = 32;
  const DatasetHandle ds = gen_synthetic(2026, npc, classes, size);
  for (int cls = 0; cls < classes; ++cls) {
    std::vector<double> energy(static_cast<std::size_t>(classes), 0.0);
    for (int s = 0; s < npc; ++s) {
      const double* img = ds.images.data() + static_cast<std::size_t>(cls * npc + s) * size * size;
      double mean = 0.0;
      for (int p = 0; p < size * size; ++p) mean += img[p];
      mean /= size * size;
      for (int m = 0; m < classes; ++m) {
        const double th = M_PI * m / classes;
        for (double fscale : {0.9, 1.0, 1.1}) {
          const double f = kGratingFreq * fscale;
          double cs = 0.0, sn = 0.0;
          for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
              const double t = f * (x * std::cos(th) + y * std::sin(th));
              const double v = img[y * size + x] - mean;
              cs += v * std::cos(t);
              sn += v * std::sin(t);
            }
          energy[static_cast<std::size_t>(m)] += cs * cs + sn * sn;
        }
      }
    }
    int arg = 0;
    for (int m = 1; m < classes; ++m)
      if (energy[static_cast<std::size_t>(m)] > energy[static_cast<std::size_t>(arg)]) arg = m;
    CHECK(arg == cls);
  }
}

TEST_CASE("idx containers round-trip byte for byte") {
  TempDir tmp;
  std::vector<std::uint8_t> px(3 * 4 * 5);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i * 7 % 256);
  write_idx_images(tmp.file("img.idx"), 3, 4, 5, px);
  int n = 0, h = 0, w = 0;
  std::vector<std::uint8_t> back;
  read_idx_images(tmp.file("img.idx"), n, h, w, back);
  CHECK(n == 3);
  CHECK(h == 4);
  CHECK(w == 5);
  CHECK(back == px);

  const std::vector<std::uint8_t> labels = {0, 1, 7, 3};
  write_idx_labels(tmp.file("lab.idx"), labels);
  std::vector<std::uint8_t> lback;
  read_idx_labels(tmp.file("lab.idx"), lback);
  CHECK(lback == labels);

  // dataset round trip: quantization error at most half a step
  const DatasetHandle ds = gen_synthetic(5, 3, 8, 8);
  save_idx_dataset(tmp.file("ds_img.idx"), tmp.file("ds_lab.idx"), ds);
  const DatasetHandle lds =
      load_idx_dataset(tmp.file("ds_img.idx"), tmp.file("ds_lab.idx"), 8, "train");
  CHECK(lds.n == ds.n);
  CHECK(lds.labels == ds.labels);
  REQUIRE(lds.images.size() == ds.images.size());
  for (std::size_t i = 0; i < ds.images.size(); ++i)
    CHECK(std::fabs(lds.images[i] - ds.images[i]) <= 0.5 / 255.0 + 1e-12);

  // re-saving the loaded dataset reproduces the files exactly
  save_idx_dataset(tmp.file("ds_img2.idx"), tmp.file("ds_lab2.idx"), lds);
  CHECK(read_bytes(tmp.file("ds_img2.idx")) == read_bytes(tmp.file("ds_img.idx")));
  CHECK(read_bytes(tmp.file("ds_lab2.idx")) == read_bytes(tmp.file("ds_lab.idx")));
}

TEST_CASE("idx readers reject corrupt containers") {
  TempDir tmp;
  std::vector<std::uint8_t> px(2 * 3 * 3, 9);
  write_idx_images(tmp.file("img.idx"), 2, 3, 3, px);
  std::string bytes = read_bytes(tmp.file("img.idx"));
  std::string bad = bytes;
  bad[3] = '\x05';  // wrong magic
  write_bytes(tmp.file("badmagic.idx"), bad);
  int n, h, w;
  std::vector<std::uint8_t> out;
  CHECK_THROWS_AS(read_idx_images(tmp.file("badmagic.idx"), n, h, w, out), IoError);

  write_bytes(tmp.file("short.idx"), bytes.substr(0, bytes.size() - 4));
  CHECK_THROWS_AS(read_idx_images(tmp.file("short.idx"), n, h, w, out), IoError);

  write_bytes(tmp.file("long.idx"), bytes + "xx");
  CHECK_THROWS_AS(read_idx_images(tmp.file("long.idx"), n, h, w, out), IoError);

  std::vector<std::uint8_t> lab;
  CHECK_THROWS_AS(read_idx_labels(tmp.file("img.idx"), lab), IoError);  // image magic
  CHECK_THROWS_AS(read_idx_images(tmp.file("absent.idx"), n, h, w, out), Error);
}

TEST_CASE("checkpoints restore a model bit for bit") {
  TempDir tmp;
  NetworkConfig net = tiny_net();
  net.attention_at = {3};
  Model a = build_network(net, 1);
  Model b = build_network(net, 2);
  save_checkpoint(tmp.file("a.rgkp"), a.params);

  Rng rng(3);
  std::vector<double> xs(256);
  for (double& v : xs) v = rng.uniform(0.0, 1.0);
  const Tensor x = Tensor::from_data({1, 1, 16, 16}, xs);
  NoGradGuard ng;
  const Tensor before = a.forward(x, false);
  const Tensor other = b.forward(x, false);
  CHECK(before.data() != other.data());  // different init actually differs

  load_checkpoint(tmp.file("a.rgkp"), b.params);
  const Tensor after = b.forward(x, false);
  REQUIRE(after.data().size() == before.data().size());
  for (std::size_t i = 0; i < after.data().size(); ++i)
    CHECK(after.data()[i] ==
          doctest::Approx(before.data()[i]).epsilon(1e-5));  // f32 rounding only

  // saving the restored model reproduces the file exactly
  save_checkpoint(tmp.file("b.rgkp"), b.params);
  CHECK(read_bytes(tmp.file("b.rgkp")) == read_bytes(tmp.file("a.rgkp")));
}

TEST_CASE("checkpoint loader is strict about layout") {
  TempDir tmp;
  Model a = build_network(tiny_net(), 1);
  save_checkpoint(tmp.file("a.rgkp"), a.params);

  NetworkConfig wide = tiny_net();
  wide.stage_widths = {8, 8, 8, 8};
  Model w = build_network(wide, 1);
  CHECK_THROWS_AS(load_checkpoint(tmp.file("a.rgkp"), w.params), IoError);

  const std::string bytes = read_bytes(tmp.file("a.rgkp"));
  std::string bad = bytes;
  bad[0] = 'X';
  write_bytes(tmp.file("magic.rgkp"), bad);
  CHECK_THROWS_AS(load_checkpoint(tmp.file("magic.rgkp"), a.params), IoError);

  bad = bytes;
  bad[4] = '\x09';  // version
  write_bytes(tmp.file("ver.rgkp"), bad);
  CHECK_THROWS_AS(load_checkpoint(tmp.file("ver.rgkp"), a.params), IoError);

  write_bytes(tmp.file("short.rgkp"), bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(tmp.file("short.rgkp"), a.params), IoError);

  write_bytes(tmp.file("long.rgkp"), bytes + "trailing");
  CHECK_THROWS_AS(load_checkpoint(tmp.file("long.rgkp"), a.params), IoError);
}

TEST_CASE("pgm files round-trip") {
  TempDir tmp;
  std::vector<std::uint8_t> px(6 * 4);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i * 11);
  write_pgm(tmp.file("t.pgm"), 4, 6, px);
  int h = 0, w = 0;
  const std::vector<std::uint8_t> back = read_pgm(tmp.file("t.pgm"), h, w);
  CHECK(h == 4);
  CHECK(w == 6);
  CHECK(back == px);
  const std::string bytes = read_bytes(tmp.file("t.pgm"));
  CHECK(bytes.substr(0, 3) == "P5\n");
}

TEST_CASE("normalization maps min-max to 0-255 and constants to gray") {
  const double vals[4] = {-1.0, 0.0, 1.0, 3.0};
  const std::vector<std::uint8_t> px = normalize_slice(vals, 4);
  CHECK(px[0] == 0);
  CHECK(px[3] == 255);
  CHECK(px[1] == static_cast<std::uint8_t>(std::lround(1.0 / 4.0 * 255.0)));
  const double flat[3] = {0.7, 0.7, 0.7};
  const std::vector<std::uint8_t> gray = normalize_slice(flat, 3);
  CHECK(gray == std::vector<std::uint8_t>(3, 128));
}

TEST_CASE("kernel export writes one image per channel pair") {
  TempDir tmp;
  const RetinaMask mask = build_mask(7, 1.75, MaskVariant::HARD);
  const RegaKernelBank bank = init_bank(2, 3, mask, 77);
  export_bank_kernels(bank, "L4.rg0", tmp.path.string());

  NoGradGuard ng;
  const Tensor k = build_kernel(bank);
  for (int o = 0; o < 3; ++o)
    for (int i = 0; i < 2; ++i) {
      const std::string name =
          "kernel_L4.rg0_" + std::to_string(o) + "_" + std::to_string(i) + ".pgm";
      REQUIRE(fs::exists(tmp.path / name));
      int h = 0, w = 0;
      const std::vector<std::uint8_t> px = read_pgm(tmp.file(name), h, w);
      CHECK(h == 7);
      CHECK(w == 7);
      const double* slice = k.data().data() + static_cast<std::size_t>((o * 2 + i)) * 49;
      CHECK(px == normalize_slice(slice, 49));
    }
}

TEST_CASE("metrics csv is stable and well formed") {
  MetricsLog log;
  log.rows.push_back({1, 2.0794415416798357, 12.5, 50.0, 0.1234});
  log.rows.push_back({2, 1.5, 100.0, 100.0, 0.2});
  CHECK(metrics_csv(log, true) ==
        "epoch,loss,top1,top5,seconds\n"
        "1,2.07944154168,12.5,50,0.123\n"
        "2,1.5,100,100,0.200\n");
  CHECK(metrics_csv(log, false) ==
        "epoch,loss,top1,top5\n"
        "1,2.07944154168,12.5,50\n"
        "2,1.5,100,100\n");
}

TEST_CASE("evaluate reports percentages with top5 dominating top1") {
  TrainConfig cfg = tiny_train();
  cfg.net.num_classes = 4;
  cfg.data.train_per_class = 4;
  cfg.data.val_per_class = 25;
  auto [train_ds, val_ds] = make_datasets(cfg);
  CHECK(val_ds.n == 100);
  Model model = build_network(cfg.net, 9);
  const EvalResult r = evaluate(model, val_ds, 16);
  CHECK(r.top1 >= 0.0);
  CHECK(r.top1 <= 100.0);
  CHECK(r.top5 >= r.top1);
  CHECK(r.top5 == 100.0);  // k = min(5, classes) = 4 covers every class

  DatasetHandle wrong = val_ds;
  wrong.height = 8;
  wrong.width = 8;
  wrong.images.resize(static_cast<std::size_t>(wrong.n) * 64);
  CHECK_THROWS_AS(evaluate(model, wrong, 16), ShapeError);
}

TEST_CASE("training runs and mostly learns at toy scale") {
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig cfg = tiny_train();
    cfg.seed = seed;
    const TrainResult r = train(cfg);
    REQUIRE(r.log.rows.size() == 2);
    for (const EpochRow& row : r.log.rows) {
      CHECK(std::isfinite(row.loss));
      CHECK(row.top1 >= 0.0);
      CHECK(row.top5 <= 100.0);
    }
    if (r.log.rows[1].loss < r.log.rows[0].loss) ++improved;
    CHECK(r.best_epoch >= 1);
    CHECK(r.best_top1 >= r.log.rows[0].top1 - 1e-12);
  }
  CHECK(improved >= 4);
}

TEST_CASE("training is bit-deterministic") {
  TrainConfig cfg = tiny_train();
  cfg.epochs = 3;
  cfg.max_steps = 10;
  cfg.seed = 7;
  const TrainResult a = train(cfg);
  const TrainResult b = train(cfg);
  REQUIRE(a.step_losses.size() == 10);
  CHECK(a.step_losses == b.step_losses);
  CHECK(metrics_csv(a.log, false) == metrics_csv(b.log, false));
}

TEST_CASE("training writes its artifacts") {
  TempDir tmp;
  TrainConfig cfg = tiny_train();
  cfg.epochs = 1;
  cfg.out_dir = tmp.path.string();
  const TrainResult r = train(cfg);
  CHECK(fs::exists(tmp.path / "metrics.csv"));
  CHECK(fs::exists(tmp.path / "steps.csv"));
  CHECK(fs::exists(tmp.path / "best.rgkp"));
  const std::string steps = read_bytes(tmp.file("steps.csv"));
  CHECK(steps.rfind("step,loss\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : steps)
    if (ch == '\n') ++lines;
  CHECK(lines == r.step_losses.size() + 1);

  // the best checkpoint loads back into a fresh model of the same shape
  Model fresh = build_network(cfg.net, 12345);
  CHECK_NOTHROW(load_checkpoint(tmp.file("best.rgkp"), fresh.params));
}

TEST_CASE("composite gradient checks pass") {
  const GradCheckReport ops_report = gradcheck_ops(101);
  INFO(ops_report.to_string());
  CHECK(ops_report.all_pass());

  const GradCheckReport net_report = gradcheck_network(2024);
  INFO(net_report.to_string());
  CHECK(net_report.all_pass());

  const GradCheckReport fusion_report = gradcheck_fusion(2025);
  INFO(fusion_report.to_string());
  CHECK(fusion_report.all_pass());

  CHECK(run_gradcheck("gabor", 1).all_pass());
  CHECK_THROWS_AS(run_gradcheck("bogus", 1), ValueError);
}
