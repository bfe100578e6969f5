#pragma once

#include <string>
#include <vector>

#include "rega/config.hpp"
#include "rega/dataset.hpp"
#include "rega/optimizer.hpp"
#include "rega/rega_attention.hpp"

namespace rega {

struct DataConfig {
  std::string source = "synthetic";  // synthetic | idx
  int train_per_class = 100;
  int val_per_class = 25;
  double amplitude = 0.25;
  std::string idx_train_images, idx_train_labels;
  std::string idx_val_images, idx_val_labels;
};

struct TrainConfig {
  SgdConfig sgd;
  int epochs = 20;
  int batch_size = 16;
  int max_steps = 0;  // 0: no cap; otherwise stop after this many optimizer steps
  std::uint64_t seed = 1;
  std::string out_dir;  // empty: keep everything in memory
  NetworkConfig net;
  DataConfig data;

  void validate() const;
};

std::vector<std::string> known_config_keys();
TrainConfig train_config_from(const Config& cfg);

struct EpochRow {
  int epoch = 0;       // 1-based in logs
  double loss = 0.0;   // mean training loss over the epoch's batches
  double top1 = 0.0;   // validation accuracy, percent
  double top5 = 0.0;
  double seconds = 0.0;
};

struct MetricsLog {
  std::vector<EpochRow> rows;
};

// Header epoch,loss,top1,top5,seconds. Wall time is the one non-deterministic
// column; with_seconds=false drops it so two runs can be compared byte-wise.
std::string metrics_csv(const MetricsLog& log, bool with_seconds = true);

struct EvalResult {
  double top1 = 0.0;
  double top5 = 0.0;
};

// Rank of the true class under "higher logit first, ties to lower index";
// a prediction is top-k correct iff the rank is < k.
int label_rank(const double* logits, int num_classes, int label);

// Eval mode: running BN statistics, no graphs. Top-k ties break toward the
// lower class index; k = min(5, num_classes) for the top-5 column.
EvalResult evaluate(Model& model, const DatasetHandle& ds, int batch_size);

struct TrainResult {
  MetricsLog log;
  std::vector<double> step_losses;  // one entry per optimizer step
  double best_top1 = 0.0;
  int best_epoch = 0;
};

std::pair<DatasetHandle, DatasetHandle> make_datasets(const TrainConfig& cfg);

// Core loop over a caller-built model and datasets; writes metrics.csv,
// steps.csv and best.rgkp under cfg.out_dir when set.
TrainResult run_training(const TrainConfig& cfg, Model& model, const DatasetHandle& train_ds,
                         const DatasetHandle& val_ds);

// Convenience wrapper: build datasets and model from cfg, then train.
TrainResult train(const TrainConfig& cfg);

}  // namespace rega
