#include "rega/params.hpp"

namespace rega {

void ParamRegistry::add(Entry e) {
  if (!e.tensor.defined()) throw ValueError("registry: undefined tensor for " + e.name);
  if (index_.count(e.name)) throw ValueError("registry: duplicate name " + e.name);
  if (e.trainable && !e.tensor.requires_grad())
    throw ValueError("registry: trainable entry " + e.name + " lacks requires_grad");
  index_[e.name] = entries_.size();
  entries_.push_back(std::move(e));
}

void ParamRegistry::add_param(const std::string& name, const Tensor& t) {
  Entry e;
  e.name = name;
  e.tensor = t;
  add(std::move(e));
}

void ParamRegistry::add_param_clamped(const std::string& name, const Tensor& t, double lo,
                                      double hi) {
  Entry e;
  e.name = name;
  e.tensor = t;
  e.clamp_lo = lo;
  e.clamp_hi = hi;
  add(std::move(e));
}

void ParamRegistry::add_buffer(const std::string& name, const Tensor& t) {
  Entry e;
  e.name = name;
  e.tensor = t;
  e.trainable = false;
  add(std::move(e));
}

bool ParamRegistry::contains(const std::string& name) const { return index_.count(name) > 0; }

const ParamRegistry::Entry& ParamRegistry::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValueError("registry: no entry named " + name);
  return entries_[it->second];
}

std::size_t ParamRegistry::num_trainable_scalars() const {
  std::size_t n = 0;
  for (const Entry& e : entries_)
    if (e.trainable) n += e.tensor.numel();
  return n;
}

std::size_t ParamRegistry::num_trainable_tensors() const {
  std::size_t n = 0;
  for (const Entry& e : entries_)
    if (e.trainable) ++n;
  return n;
}

void ParamRegistry::absorb(const std::string& prefix, const ParamRegistry& other) {
  for (const Entry& e : other.entries()) {
    Entry copy = e;
    copy.name = prefix + e.name;
    add(std::move(copy));
  }
}

}  // namespace rega
