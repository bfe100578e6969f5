#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rega/tensor.hpp"

namespace rega {

// Named leaf registry: trainable parameters plus non-trainable buffers
// (batch-norm running stats). Order of registration is the serialization
// order, so construction must be deterministic.
class ParamRegistry {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
    // Optional post-step clamp window on the raw values.
    double clamp_lo = -std::numeric_limits<double>::infinity();
    double clamp_hi = std::numeric_limits<double>::infinity();
  };

  void add_param(const std::string& name, const Tensor& t);
  void add_param_clamped(const std::string& name, const Tensor& t, double lo, double hi);
  void add_buffer(const std::string& name, const Tensor& t);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  bool contains(const std::string& name) const;
  const Entry& at(const std::string& name) const;

  std::size_t num_trainable_scalars() const;
  std::size_t num_trainable_tensors() const;

  // Merges another registry under a name prefix.
  void absorb(const std::string& prefix, const ParamRegistry& other);

 private:
  void add(Entry e);
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace rega
