#include "rega/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "rega/error.hpp"

namespace rega {

void write_pgm(const std::string& path, int h, int w, const std::vector<std::uint8_t>& pixels) {
  if (h < 1 || w < 1 || pixels.size() != static_cast<std::size_t>(h) * w)
    throw ValueError("pgm: pixel count does not match " + std::to_string(h) + "x" +
                     std::to_string(w));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("pgm: cannot open " + path + " for writing");
  f << "P5\n" << w << " " << h << "\n255\n";
  f.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!f) throw IoError("pgm: short write to " + path);
}

namespace {

int next_header_int(std::ifstream& f, const std::string& path) {
  // Skips whitespace and # comment lines, per the PNM header grammar.
  for (;;) {
    const int c = f.peek();
    if (c == '#') {
      std::string line;
      std::getline(f, line);
    } else if (std::isspace(c)) {
      f.get();
    } else {
      break;
    }
  }
  int v = 0;
  if (!(f >> v)) throw IoError("pgm: malformed header in " + path);
  return v;
}

}  // namespace

std::vector<std::uint8_t> read_pgm(const std::string& path, int& h, int& w) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("pgm: cannot open " + path);
  char m0 = 0, m1 = 0;
  f.get(m0);
  f.get(m1);
  if (m0 != 'P' || m1 != '5') throw IoError("pgm: " + path + " is not binary P5");
  w = next_header_int(f, path);
  h = next_header_int(f, path);
  const int maxval = next_header_int(f, path);
  if (w < 1 || h < 1 || maxval != 255) throw IoError("pgm: unsupported header in " + path);
  f.get();  // single whitespace after maxval
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h) * w);
  if (!f.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    throw IoError("pgm: truncated payload in " + path);
  return pixels;
}

std::vector<std::uint8_t> normalize_slice(const double* vals, std::size_t n) {
  const auto [lo_it, hi_it] = std::minmax_element(vals, vals + n);
  const double lo = *lo_it, hi = *hi_it;
  std::vector<std::uint8_t> out(n);
  if (hi - lo < 1e-12) {
    std::fill(out.begin(), out.end(), static_cast<std::uint8_t>(128));
    return out;
  }
  for (std::size_t k = 0; k < n; ++k)
    out[k] = static_cast<std::uint8_t>(std::lround((vals[k] - lo) / (hi - lo) * 255.0));
  return out;
}

void export_bank_kernels(const RegaKernelBank& bank, const std::string& layer,
                         const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("export: cannot create " + out_dir + ": " + ec.message());
  NoGradGuard ng;
  Tensor k = build_kernel(bank);
  const std::size_t plane = static_cast<std::size_t>(bank.size) * bank.size;
  for (int o = 0; o < bank.cout; ++o)
    for (int i = 0; i < bank.cin; ++i) {
      const double* slice = k.data().data() + (static_cast<std::size_t>(o) * bank.cin + i) * plane;
      const std::string name = "kernel_" + layer + "_" + std::to_string(o) + "_" +
                               std::to_string(i) + ".pgm";
      write_pgm((std::filesystem::path(out_dir) / name).string(), bank.size, bank.size,
                normalize_slice(slice, plane));
    }
}

}  // namespace rega
