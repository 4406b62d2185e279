#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "zrp/rates.hpp"

namespace zrp {

// Flat key-value configuration with one section per experiment:
//
//   seed = 42          # keys before any section apply to every experiment
//   [fluct-eq]
//   n_sites = 512
//   times = 0.1, 0.2
//
// Lookup order is section value, then common value, then the caller default.
// Typed getters throw std::invalid_argument with the offending key in the
// message.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void select_section(const std::string& section) { section_ = section; }
  const std::string& section() const { return section_; }

  // CLI overrides land in the selected section (or common when none).
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& def) const;
  std::string require_str(const std::string& key) const;
  double get_double(const std::string& key, double def) const;
  long get_long(const std::string& key, long def) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& def) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& def) const;

  // Effective (section-resolved) key-value view, for the manifest.
  std::map<std::string, std::string> effective() const;

 private:
  const std::string* lookup(const std::string& key) const;
  std::string qualified(const std::string& key) const;

  std::map<std::string, std::string> common_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string section_;
};

// Rate family from the configuration keys rate, theta, theta1, theta2, K0,
// head, table, k0.
RateFunction rate_from_config(const Config& cfg);

}  // namespace zrp
