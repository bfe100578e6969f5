#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rega/tensor.hpp"

namespace rega {

enum class DataSource { SYNTHETIC, IDX };

struct DatasetHandle {
  DataSource source = DataSource::SYNTHETIC;
  int n = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<double> images;  // n*channels*height*width, row-major, values in [0,1]
  std::vector<int> labels;     // each in [0, num_classes)
  std::string split;

  void validate() const;
};

// Oriented sinusoidal gratings, one orientation per class: class m is at angle
// pi*m/classes. Random phase, +-10% frequency jitter, additive Gaussian noise
// sigma 0.1, clipped to [0,1]. Samples are laid out class-major; shuffling is
// the training loop's job.
DatasetHandle gen_synthetic(std::uint64_t seed, int n_per_class, int classes = 8, int size = 32,
                            int channels = 1, double amplitude = 0.25);

// Base angular frequency of the gratings, radians per pixel.
inline constexpr double kGratingFreq = 0.942477796076938;  // 2*pi*0.15

Tensor make_batch(const DatasetHandle& ds, const std::vector<int>& idx);
std::vector<int> batch_labels(const DatasetHandle& ds, const std::vector<int>& idx);

// IDX containers, big-endian: images magic 0x00000803 (u8, N x H x W),
// labels magic 0x00000801 (u8, N).
void write_idx_images(const std::string& path, int n, int h, int w,
                      const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);
void read_idx_images(const std::string& path, int& n, int& h, int& w,
                     std::vector<std::uint8_t>& pixels);
void read_idx_labels(const std::string& path, std::vector<std::uint8_t>& labels);

// Float dataset <-> u8 IDX pair. Only single-channel datasets map onto the
// rank-3 image container.
DatasetHandle load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                               int num_classes, const std::string& split);
void save_idx_dataset(const std::string& images_path, const std::string& labels_path,
                      const DatasetHandle& ds);

}  // namespace rega
