#include "zrp/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace zrp {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": empty section name");
      cfg.sections_[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (section.empty())
      cfg.common_[key] = value;
    else
      cfg.sections_[section][key] = value;
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  if (section_.empty())
    common_[key] = value;
  else
    sections_[section_][key] = value;
}

const std::string* Config::lookup(const std::string& key) const {
  if (!section_.empty()) {
    const auto sec = sections_.find(section_);
    if (sec != sections_.end()) {
      const auto it = sec->second.find(key);
      if (it != sec->second.end()) return &it->second;
    }
  }
  const auto it = common_.find(key);
  if (it != common_.end()) return &it->second;
  return nullptr;
}

std::string Config::qualified(const std::string& key) const {
  return section_.empty() ? key : section_ + "." + key;
}

bool Config::has(const std::string& key) const { return lookup(key) != nullptr; }

std::string Config::get_str(const std::string& key, const std::string& def) const {
  const auto* v = lookup(key);
  return v ? *v : def;
}

std::string Config::require_str(const std::string& key) const {
  const auto* v = lookup(key);
  if (!v) throw std::invalid_argument("missing required config key: " + qualified(key));
  return *v;
}

double Config::get_double(const std::string& key, double def) const {
  const auto* v = lookup(key);
  if (!v) return def;
  try {
    std::size_t pos = 0;
    const double d = std::stod(*v, &pos);
    if (trim(v->substr(pos)).empty()) return d;
  } catch (...) {
  }
  throw std::invalid_argument(qualified(key) + ": expected a number, got '" + *v + "'");
}

long Config::get_long(const std::string& key, long def) const {
  const auto* v = lookup(key);
  if (!v) return def;
  try {
    std::size_t pos = 0;
    const long d = std::stol(*v, &pos);
    if (trim(v->substr(pos)).empty()) return d;
  } catch (...) {
  }
  throw std::invalid_argument(qualified(key) + ": expected an integer, got '" + *v + "'");
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t def) const {
  const auto* v = lookup(key);
  if (!v) return def;
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(*v, &pos);
    if (trim(v->substr(pos)).empty()) return d;
  } catch (...) {
  }
  throw std::invalid_argument(qualified(key) + ": expected a 64-bit seed, got '" + *v + "'");
}

bool Config::get_bool(const std::string& key, bool def) const {
  const auto* v = lookup(key);
  if (!v) return def;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw std::invalid_argument(qualified(key) + ": expected a boolean, got '" + *v + "'");
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& def) const {
  const auto* v = lookup(key);
  if (!v) return def;
  std::vector<double> out;
  for (const auto& tok : split_list(*v)) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(tok, &pos);
      if (trim(tok.substr(pos)).empty()) {
        out.push_back(d);
        continue;
      }
    } catch (...) {
    }
    throw std::invalid_argument(qualified(key) + ": expected a number list, got '" + *v + "'");
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& key, const std::vector<int>& def) const {
  const auto* v = lookup(key);
  if (!v) return def;
  std::vector<int> out;
  for (const auto& tok : split_list(*v)) {
    try {
      std::size_t pos = 0;
      const int d = std::stoi(tok, &pos);
      if (trim(tok.substr(pos)).empty()) {
        out.push_back(d);
        continue;
      }
    } catch (...) {
    }
    throw std::invalid_argument(qualified(key) + ": expected an integer list, got '" + *v + "'");
  }
  return out;
}

std::map<std::string, std::string> Config::effective() const {
  std::map<std::string, std::string> out = common_;
  if (!section_.empty()) {
    const auto sec = sections_.find(section_);
    if (sec != sections_.end())
      for (const auto& [k, v] : sec->second) out[k] = v;
  }
  return out;
}

RateFunction rate_from_config(const Config& cfg) {
  const std::string family = cfg.get_str("rate", "linear");
  RateFunction r = [&] {
    switch (rate_family_from_string(family)) {
      case RateFamily::linear:
        return RateFunction::linear(cfg.get_double("theta", 1.0));
      case RateFamily::e1_piecewise: {
        std::vector<double> head = cfg.get_doubles("head", {});
        // `head` lists c(1)..c(K0-1); internally index 0 is c(0) = 0.
        std::vector<double> full{0.0};
        full.insert(full.end(), head.begin(), head.end());
        const int k0_default = static_cast<int>(head.size()) + 1;
        return RateFunction::e1_piecewise(cfg.get_double("theta", 1.0),
                                          static_cast<int>(cfg.get_long("K0", k0_default)),
                                          head.empty() ? std::vector<double>{} : full);
      }
      case RateFamily::e2_parity:
        return RateFunction::e2_parity(cfg.get_double("theta1", 1.0),
                                       cfg.get_double("theta2", 1.0),
                                       static_cast<int>(cfg.get_long("K0", 1)));
      case RateFamily::custom_table:
        return RateFunction::custom_table(cfg.get_doubles("table", {}));
    }
    throw std::invalid_argument("rate: unknown family");
  }();
  if (cfg.has("k0")) r.set_gap_k0(static_cast<int>(cfg.get_long("k0", 1)));
  return r;
}

}  // namespace zrp
