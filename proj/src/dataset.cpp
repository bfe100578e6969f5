#include "rega/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "rega/error.hpp"
#include "rega/rng.hpp"

namespace rega {

void DatasetHandle::validate() const {
  const std::size_t want = static_cast<std::size_t>(n) * channels * height * width;
  if (images.size() != want)
    throw ValueError("dataset: image buffer holds " + std::to_string(images.size()) +
                     " values, expected " + std::to_string(want));
  if (labels.size() != static_cast<std::size_t>(n))
    throw ValueError("dataset: label count " + std::to_string(labels.size()) + " != n " +
                     std::to_string(n));
  for (int l : labels)
    if (l < 0 || l >= num_classes)
      throw ValueError("dataset: label " + std::to_string(l) + " outside [0, " +
                       std::to_string(num_classes) + ")");
}

DatasetHandle gen_synthetic(std::uint64_t seed, int n_per_class, int classes, int size,
                            int channels, double amplitude) {
  if (n_per_class < 1 || classes < 2 || size < 4 || channels < 1)
    throw ValueError("gen_synthetic: bad dimensions");
  DatasetHandle ds;
  ds.source = DataSource::SYNTHETIC;
  ds.n = n_per_class * classes;
  ds.channels = channels;
  ds.height = size;
  ds.width = size;
  ds.num_classes = classes;
  ds.images.resize(static_cast<std::size_t>(ds.n) * channels * size * size);
  ds.labels.resize(static_cast<std::size_t>(ds.n));
  ds.split = "synthetic";

  Rng rng(seed);
  std::size_t pos = 0;
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  for (int m = 0; m < classes; ++m) {
    const double theta = M_PI * m / classes;
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int k = 0; k < n_per_class; ++k) {
      const int sample = m * n_per_class + k;
      ds.labels[static_cast<std::size_t>(sample)] = m;
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      const double freq = kGratingFreq * (1.0 + rng.uniform(-0.1, 0.1));
      double* img = ds.images.data() + pos;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          double v = 0.5 + amplitude * std::sin(freq * (x * ct + y * st) + phase) +
                     0.1 * rng.normal();
          if (v < 0.0) v = 0.0;
          if (v > 1.0) v = 1.0;
          img[y * size + x] = v;
        }
      for (int c = 1; c < channels; ++c)
        std::copy(img, img + plane, img + static_cast<std::size_t>(c) * plane);
      pos += static_cast<std::size_t>(channels) * plane;
    }
  }
  ds.validate();
  return ds;
}

Tensor make_batch(const DatasetHandle& ds, const std::vector<int>& idx) {
  if (idx.empty()) throw ValueError("make_batch: empty index list");
  const std::size_t sample = static_cast<std::size_t>(ds.channels) * ds.height * ds.width;
  std::vector<double> out(idx.size() * sample);
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const int i = idx[b];
    if (i < 0 || i >= ds.n)
      throw ValueError("make_batch: index " + std::to_string(i) + " out of range");
    std::copy(ds.images.begin() + static_cast<std::ptrdiff_t>(i * sample),
              ds.images.begin() + static_cast<std::ptrdiff_t>((i + 1) * sample),
              out.begin() + static_cast<std::ptrdiff_t>(b * sample));
  }
  return Tensor::from_data({static_cast<int>(idx.size()), ds.channels, ds.height, ds.width},
                           std::move(out));
}

std::vector<int> batch_labels(const DatasetHandle& ds, const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t b = 0; b < idx.size(); ++b)
    out[b] = ds.labels.at(static_cast<std::size_t>(idx[b]));
  return out;
}

namespace {

void put_u32_be(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_be(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw IoError("idx: truncated header in " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("idx: cannot open " + path + " for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("idx: cannot open " + path);
  return f;
}

}  // namespace

void write_idx_images(const std::string& path, int n, int h, int w,
                      const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(n) * h * w)
    throw ValueError("idx: pixel count does not match n*h*w");
  std::ofstream f = open_out(path);
  put_u32_be(f, 0x00000803u);
  put_u32_be(f, static_cast<std::uint32_t>(n));
  put_u32_be(f, static_cast<std::uint32_t>(h));
  put_u32_be(f, static_cast<std::uint32_t>(w));
  f.write(reinterpret_cast<const char*>(pixels.data()),
          static_cast<std::streamsize>(pixels.size()));
  if (!f) throw IoError("idx: short write to " + path);
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream f = open_out(path);
  put_u32_be(f, 0x00000801u);
  put_u32_be(f, static_cast<std::uint32_t>(labels.size()));
  f.write(reinterpret_cast<const char*>(labels.data()),
          static_cast<std::streamsize>(labels.size()));
  if (!f) throw IoError("idx: short write to " + path);
}

void read_idx_images(const std::string& path, int& n, int& h, int& w,
                     std::vector<std::uint8_t>& pixels) {
  std::ifstream f = open_in(path);
  const std::uint32_t magic = get_u32_be(f, path);
  if (magic != 0x00000803u) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw IoError("idx: " + path + " has magic " + buf + ", expected 0x00000803");
  }
  n = static_cast<int>(get_u32_be(f, path));
  h = static_cast<int>(get_u32_be(f, path));
  w = static_cast<int>(get_u32_be(f, path));
  if (n < 0 || h <= 0 || w <= 0) throw IoError("idx: bad dims in " + path);
  pixels.resize(static_cast<std::size_t>(n) * h * w);
  if (!f.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    throw IoError("idx: truncated pixel payload in " + path);
  if (f.peek() != std::ifstream::traits_type::eof())
    throw IoError("idx: trailing bytes in " + path);
}

void read_idx_labels(const std::string& path, std::vector<std::uint8_t>& labels) {
  std::ifstream f = open_in(path);
  const std::uint32_t magic = get_u32_be(f, path);
  if (magic != 0x00000801u) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw IoError("idx: " + path + " has magic " + buf + ", expected 0x00000801");
  }
  const std::uint32_t n = get_u32_be(f, path);
  labels.resize(n);
  if (!f.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size())))
    throw IoError("idx: truncated label payload in " + path);
  if (f.peek() != std::ifstream::traits_type::eof())
    throw IoError("idx: trailing bytes in " + path);
}

DatasetHandle load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                               int num_classes, const std::string& split) {
  int n = 0, h = 0, w = 0;
  std::vector<std::uint8_t> pixels, labels;
  read_idx_images(images_path, n, h, w, pixels);
  read_idx_labels(labels_path, labels);
  if (labels.size() != static_cast<std::size_t>(n))
    throw IoError("idx: " + std::to_string(n) + " images but " + std::to_string(labels.size()) +
                  " labels");
  DatasetHandle ds;
  ds.source = DataSource::IDX;
  ds.n = n;
  ds.channels = 1;
  ds.height = h;
  ds.width = w;
  ds.num_classes = num_classes;
  ds.split = split;
  ds.images.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) ds.images[i] = pixels[i] / 255.0;
  ds.labels.assign(labels.begin(), labels.end());
  ds.validate();
  return ds;
}

void save_idx_dataset(const std::string& images_path, const std::string& labels_path,
                      const DatasetHandle& ds) {
  ds.validate();
  if (ds.channels != 1)
    throw ValueError("idx: only single-channel datasets fit the rank-3 image container");
  if (ds.num_classes > 256) throw ValueError("idx: labels do not fit in u8");
  std::vector<std::uint8_t> pixels(ds.images.size());
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    double v = ds.images[i];
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  std::vector<std::uint8_t> labels(ds.labels.begin(), ds.labels.end());
  write_idx_images(images_path, ds.n, ds.height, ds.width, pixels);
  write_idx_labels(labels_path, labels);
}

}  // namespace rega
