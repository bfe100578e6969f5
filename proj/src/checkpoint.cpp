#include "rega/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "rega/error.hpp"

namespace rega {

namespace {

void put_u16(std::ofstream& f, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint16_t get_u16(std::ifstream& f, const std::string& path) {
  unsigned char b[2];
  if (!f.read(reinterpret_cast<char*>(b), 2)) throw IoError("checkpoint: truncated " + path);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) throw IoError("checkpoint: truncated " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamRegistry& params) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("checkpoint: cannot open " + path + " for writing");
  f.write("RGKP", 4);
  put_u32(f, kCheckpointVersion);
  put_u32(f, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& e : params.entries()) {
    if (e.name.size() > 0xffff) throw ValueError("checkpoint: entry name too long: " + e.name);
    put_u16(f, static_cast<std::uint16_t>(e.name.size()));
    f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    f.put(0);  // dtype f32
    f.put(static_cast<char>(e.tensor.rank()));
    for (int d : e.tensor.dims()) put_u32(f, static_cast<std::uint32_t>(d));
    for (double v : e.tensor.data()) {
      const float fv = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &fv, 4);
      put_u32(f, bits);
    }
  }
  if (!f) throw IoError("checkpoint: short write to " + path);
}

void load_checkpoint(const std::string& path, ParamRegistry& params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "RGKP", 4) != 0)
    throw IoError("checkpoint: " + path + " is not an RGKP file");
  const std::uint32_t version = get_u32(f, path);
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: " + path + " has version " + std::to_string(version) +
                  ", expected " + std::to_string(kCheckpointVersion));
  const std::uint32_t count = get_u32(f, path);
  if (count != params.entries().size())
    throw IoError("checkpoint: " + path + " holds " + std::to_string(count) +
                  " entries, registry has " + std::to_string(params.entries().size()));
  for (auto& e : params.entries()) {
    const std::uint16_t name_len = get_u16(f, path);
    std::string name(name_len, '\0');
    if (!f.read(name.data(), name_len)) throw IoError("checkpoint: truncated " + path);
    if (name != e.name)
      throw IoError("checkpoint: entry '" + name + "' where registry expects '" + e.name + "'");
    const int dtype = f.get();
    if (dtype != 0) throw IoError("checkpoint: unknown dtype for '" + name + "'");
    const int rank = f.get();
    if (rank != e.tensor.rank())
      throw IoError("checkpoint: rank mismatch for '" + name + "'");
    Shape dims(static_cast<std::size_t>(rank));
    for (int& d : dims) d = static_cast<int>(get_u32(f, path));
    if (dims != e.tensor.dims())
      throw IoError("checkpoint: shape mismatch for '" + name + "': file " + shape_str(dims) +
                    " vs model " + shape_str(e.tensor.dims()));
    std::vector<double>& dst = e.tensor.mutable_data();
    for (double& v : dst) {
      const std::uint32_t bits = get_u32(f, path);
      float fv;
      std::memcpy(&fv, &bits, 4);
      v = static_cast<double>(fv);
    }
  }
  if (f.peek() != std::ifstream::traits_type::eof())
    throw IoError("checkpoint: trailing bytes in " + path);
}

}  // namespace rega
