#pragma once

#include <map>
#include <string>
#include <vector>

namespace rega {

// Flat key=value config, one pair per line, # starts a comment. Keys are
// namespaced with dots (train.lr, net.stage_widths, mask.r1). Later set()
// calls (CLI flag overrides) win over file values.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;
  std::vector<std::string> get_str_list(const std::string& key) const;  // empty if absent

  // Rejects keys outside the known set; catches config typos up front.
  void require_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& pairs() const { return pairs_; }

 private:
  std::map<std::string, std::string> pairs_;
};

}  // namespace rega
