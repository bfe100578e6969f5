#include "rega/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "rega/checkpoint.hpp"
#include "rega/error.hpp"
#include "rega/rng.hpp"

namespace rega {

void TrainConfig::validate() const {
  if (sgd.lr <= 0.0 || sgd.momentum < 0.0 || sgd.momentum >= 1.0 || sgd.weight_decay < 0.0)
    throw ValueError("train: bad optimizer hyperparameters");
  if (sgd.lr_step < 1) throw ValueError("train: lr_step must be >= 1");
  if (epochs < 1) throw ValueError("train: epochs must be >= 1");
  if (batch_size < 2) throw ValueError("train: batch_size must be >= 2 (batch norm)");
  if (max_steps < 0) throw ValueError("train: max_steps must be >= 0");
  if (data.source != "synthetic" && data.source != "idx")
    throw ValueError("train: data source must be synthetic or idx, got '" + data.source + "'");
  if (data.source == "synthetic" && (data.train_per_class < 1 || data.val_per_class < 1))
    throw ValueError("train: per-class sample counts must be >= 1");
  if (data.source == "idx" &&
      (data.idx_train_images.empty() || data.idx_train_labels.empty() ||
       data.idx_val_images.empty() || data.idx_val_labels.empty()))
    throw ValueError("train: idx source needs all four file paths");
  net.validate();
}

std::vector<std::string> known_config_keys() {
  return {
      "train.lr",         "train.momentum",   "train.weight_decay", "train.lr_step",
      "train.epochs",     "train.batch_size", "train.max_steps",    "train.seed",
      "train.out_dir",    "net.stage_widths", "net.blocks_per_stage",
      "net.rg_blocks",    "net.attention_at", "net.fusion",         "net.num_classes",
      "net.in_channels",  "net.in_h",         "net.in_w",           "net.gabor_seed",
      "mask.size",        "mask.r1",          "mask.variant",       "data.source",
      "data.train_per_class", "data.val_per_class", "data.amplitude",
      "data.idx_train_images", "data.idx_train_labels", "data.idx_val_images",
      "data.idx_val_labels",
  };
}

TrainConfig train_config_from(const Config& cfg) {
  cfg.require_known(known_config_keys());
  TrainConfig tc;
  tc.sgd.lr = cfg.get_double("train.lr", tc.sgd.lr);
  tc.sgd.momentum = cfg.get_double("train.momentum", tc.sgd.momentum);
  tc.sgd.weight_decay = cfg.get_double("train.weight_decay", tc.sgd.weight_decay);
  tc.sgd.lr_step = cfg.get_int("train.lr_step", tc.sgd.lr_step);
  tc.epochs = cfg.get_int("train.epochs", tc.epochs);
  tc.batch_size = cfg.get_int("train.batch_size", tc.batch_size);
  tc.max_steps = cfg.get_int("train.max_steps", tc.max_steps);
  tc.seed = cfg.get_u64("train.seed", tc.seed);
  tc.out_dir = cfg.get_str("train.out_dir", tc.out_dir);

  const std::vector<int> widths =
      cfg.get_int_list("net.stage_widths", {tc.net.stage_widths.begin(), tc.net.stage_widths.end()});
  if (widths.size() != 4) throw ValueError("config: net.stage_widths needs exactly 4 values");
  std::copy(widths.begin(), widths.end(), tc.net.stage_widths.begin());
  tc.net.blocks_per_stage = cfg.get_int("net.blocks_per_stage", tc.net.blocks_per_stage);
  tc.net.rg_blocks = cfg.get_int("net.rg_blocks", tc.net.rg_blocks);
  for (const std::string& tag : cfg.get_str_list("net.attention_at"))
    tc.net.attention_at.insert(parse_layer_tag(tag));
  tc.net.fusion = cfg.get_bool("net.fusion", tc.net.fusion);
  tc.net.num_classes = cfg.get_int("net.num_classes", tc.net.num_classes);
  tc.net.in_channels = cfg.get_int("net.in_channels", tc.net.in_channels);
  tc.net.in_h = cfg.get_int("net.in_h", tc.net.in_h);
  tc.net.in_w = cfg.get_int("net.in_w", tc.net.in_w);
  tc.net.gabor_seed = cfg.get_u64("net.gabor_seed", tc.net.gabor_seed);
  tc.net.mask_size = cfg.get_int("mask.size", tc.net.mask_size);
  tc.net.mask_r1 = cfg.get_double("mask.r1", tc.net.mask_r1);
  const std::string variant = cfg.get_str("mask.variant", "hard");
  if (variant == "hard")
    tc.net.mask_variant = MaskVariant::HARD;
  else if (variant == "soft")
    tc.net.mask_variant = MaskVariant::SOFT;
  else
    throw ValueError("config: mask.variant must be hard or soft, got '" + variant + "'");

  tc.data.source = cfg.get_str("data.source", tc.data.source);
  tc.data.train_per_class = cfg.get_int("data.train_per_class", tc.data.train_per_class);
  tc.data.val_per_class = cfg.get_int("data.val_per_class", tc.data.val_per_class);
  tc.data.amplitude = cfg.get_double("data.amplitude", tc.data.amplitude);
  tc.data.idx_train_images = cfg.get_str("data.idx_train_images", "");
  tc.data.idx_train_labels = cfg.get_str("data.idx_train_labels", "");
  tc.data.idx_val_images = cfg.get_str("data.idx_val_images", "");
  tc.data.idx_val_labels = cfg.get_str("data.idx_val_labels", "");
  tc.validate();
  return tc;
}

std::string metrics_csv(const MetricsLog& log, bool with_seconds) {
  std::string out = with_seconds ? "epoch,loss,top1,top5,seconds\n" : "epoch,loss,top1,top5\n";
  char buf[160];
  for (const EpochRow& r : log.rows) {
    if (with_seconds)
      std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.3f\n", r.epoch, r.loss, r.top1,
                    r.top5, r.seconds);
    else
      std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g\n", r.epoch, r.loss, r.top1, r.top5);
    out += buf;
  }
  return out;
}

int label_rank(const double* logits, int num_classes, int label) {
  int rank = 0;
  const double ref = logits[label];
  for (int j = 0; j < num_classes; ++j) {
    if (logits[j] > ref || (logits[j] == ref && j < label)) ++rank;
  }
  return rank;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("train: cannot open " + path + " for writing");
  f << text;
  if (!f) throw IoError("train: short write to " + path);
}

}  // namespace

EvalResult evaluate(Model& model, const DatasetHandle& ds, int batch_size) {
  if (ds.channels != model.cfg.in_channels || ds.height != model.cfg.in_h ||
      ds.width != model.cfg.in_w)
    throw ShapeError("evaluate: dataset " + std::to_string(ds.channels) + "x" +
                     std::to_string(ds.height) + "x" + std::to_string(ds.width) +
                     " does not match network input");
  if (ds.num_classes != model.cfg.num_classes)
    throw ValueError("evaluate: dataset has " + std::to_string(ds.num_classes) +
                     " classes, network " + std::to_string(model.cfg.num_classes));
  NoGradGuard ng;
  const int k5 = std::min(5, model.cfg.num_classes);
  long hit1 = 0, hit5 = 0;
  for (int start = 0; start < ds.n; start += batch_size) {
    const int stop = std::min(ds.n, start + batch_size);
    std::vector<int> idx(static_cast<std::size_t>(stop - start));
    std::iota(idx.begin(), idx.end(), start);
    Tensor logits = model.forward(make_batch(ds, idx), false);
    const double* row = logits.data().data();
    for (int b = 0; b < stop - start; ++b, row += model.cfg.num_classes) {
      const int rank = label_rank(row, model.cfg.num_classes, ds.labels[idx[static_cast<std::size_t>(b)]]);
      if (rank < 1) ++hit1;
      if (rank < k5) ++hit5;
    }
  }
  EvalResult r;
  r.top1 = 100.0 * static_cast<double>(hit1) / ds.n;
  r.top5 = 100.0 * static_cast<double>(hit5) / ds.n;
  return r;
}

std::pair<DatasetHandle, DatasetHandle> make_datasets(const TrainConfig& cfg) {
  if (cfg.data.source == "idx") {
    DatasetHandle tr = load_idx_dataset(cfg.data.idx_train_images, cfg.data.idx_train_labels,
                                        cfg.net.num_classes, "train");
    DatasetHandle va =
        load_idx_dataset(cfg.data.idx_val_images, cfg.data.idx_val_labels, cfg.net.num_classes,
                         "val");
    return {std::move(tr), std::move(va)};
  }
  DatasetHandle tr = gen_synthetic(derive_seed(cfg.seed, "train-data"), cfg.data.train_per_class,
                                   cfg.net.num_classes, cfg.net.in_h, cfg.net.in_channels,
                                   cfg.data.amplitude);
  tr.split = "train";
  DatasetHandle va = gen_synthetic(derive_seed(cfg.seed, "val-data"), cfg.data.val_per_class,
                                   cfg.net.num_classes, cfg.net.in_h, cfg.net.in_channels,
                                   cfg.data.amplitude);
  va.split = "val";
  return {std::move(tr), std::move(va)};
}

TrainResult run_training(const TrainConfig& cfg, Model& model, const DatasetHandle& train_ds,
                         const DatasetHandle& val_ds) {
  cfg.validate();
  train_ds.validate();
  val_ds.validate();
  if (train_ds.n < cfg.batch_size)
    throw ValueError("train: dataset smaller than one batch");

  const bool to_disk = !cfg.out_dir.empty();
  if (to_disk) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("train: cannot create " + cfg.out_dir + ": " + ec.message());
  }

  Sgd sgd(model.params, cfg.sgd);
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<int> order(static_cast<std::size_t>(train_ds.n));
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  int step = 0;
  bool stopped = false;
  for (int epoch = 0; epoch < cfg.epochs && !stopped; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < train_ds.n; start += cfg.batch_size) {
      const int stop = std::min(train_ds.n, start + cfg.batch_size);
      if (stop - start < 2) break;  // a trailing singleton cannot be batch-normed
      const std::vector<int> idx(order.begin() + start, order.begin() + stop);
      Tensor loss = model.loss(make_batch(train_ds, idx), batch_labels(train_ds, idx), true);
      backward(loss);
      sgd.step(epoch);
      loss_sum += loss.value();
      ++batches;
      result.step_losses.push_back(loss.value());
      if (cfg.max_steps > 0 && ++step >= cfg.max_steps) {
        stopped = true;
        break;
      }
    }
    const EvalResult ev = evaluate(model, val_ds, cfg.batch_size);
    EpochRow row;
    row.epoch = epoch + 1;
    row.loss = loss_sum / std::max(1, batches);
    row.top1 = ev.top1;
    row.top5 = ev.top5;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.rows.push_back(row);
    if (result.log.rows.size() == 1 || ev.top1 > result.best_top1) {
      result.best_top1 = ev.top1;
      result.best_epoch = epoch + 1;
      if (to_disk)
        save_checkpoint((std::filesystem::path(cfg.out_dir) / "best.rgkp").string(), model.params);
    }
  }

  if (to_disk) {
    write_file((std::filesystem::path(cfg.out_dir) / "metrics.csv").string(),
               metrics_csv(result.log));
    std::string steps = "step,loss\n";
    char buf[64];
    for (std::size_t s = 0; s < result.step_losses.size(); ++s) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", s + 1, result.step_losses[s]);
      steps += buf;
    }
    write_file((std::filesystem::path(cfg.out_dir) / "steps.csv").string(), steps);
  }
  return result;
}

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  const auto [train_ds, val_ds] = make_datasets(cfg);
  Model model = build_network(cfg.net, derive_seed(cfg.seed, "model"));
  return run_training(cfg, model, train_ds, val_ds);
}

}  // namespace rega
