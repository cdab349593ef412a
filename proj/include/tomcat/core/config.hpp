#pragma once

#include <map>
#include <string>
#include <vector>

namespace tomcat {

// Flat key-path configuration ("a.b.c = value" lines, '#' comments).
// Values are stored as strings and converted on access.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string require_str(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Comma-separated list value.
  std::vector<std::string> get_list(const std::string& key) const;

  // Applies every entry of `other` on top of this config.
  void merge(const Config& other);

  std::string to_string() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tomcat
