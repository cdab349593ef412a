#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tomcat/core/types.hpp"

namespace tomcat {

// Versioned little-endian binary container of named arrays plus string
// metadata. Used for model checkpoints, normalizers and trajectory chunks.
// Layout: magic, format version, schema version, string table, array table,
// end marker. Truncation or a bad magic surfaces as a corruption error.

enum class Dtype : uint8_t { F32 = 0, F64 = 1, U8 = 2, I32 = 3, U64 = 4 };

class ArchiveWriter {
 public:
  void put_string(const std::string& key, const std::string& value);
  void put_f32(const std::string& key, const MatrixXf& m);
  void put_f64(const std::string& key, const MatrixXd& m);
  void put_u8(const std::string& key, const std::vector<uint8_t>& v);
  void put_i32(const std::string& key, const std::vector<int32_t>& v);
  void put_u64(const std::string& key, const std::vector<uint64_t>& v);

  void save(const std::string& path, uint32_t schema_version) const;

 private:
  struct Array {
    Dtype dtype;
    uint64_t rows, cols;
    std::vector<uint8_t> bytes;
  };
  std::vector<std::pair<std::string, std::string>> strings_;
  std::vector<std::pair<std::string, Array>> arrays_;
};

class Archive {
 public:
  static Archive load(const std::string& path);

  uint32_t schema_version() const { return schema_version_; }
  bool has(const std::string& key) const;
  bool has_string(const std::string& key) const { return strings_.count(key) > 0; }

  const std::string& get_string(const std::string& key) const;
  MatrixXf get_f32(const std::string& key) const;
  MatrixXd get_f64(const std::string& key) const;
  std::vector<uint8_t> get_u8(const std::string& key) const;
  std::vector<int32_t> get_i32(const std::string& key) const;
  std::vector<uint64_t> get_u64(const std::string& key) const;

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

 private:
  struct Array {
    Dtype dtype;
    uint64_t rows, cols;
    std::vector<uint8_t> bytes;
  };
  const Array& find(const std::string& key, Dtype want) const;

  uint32_t schema_version_ = 0;
  std::map<std::string, std::string> strings_;
  std::map<std::string, Array> arrays_;
};

}  // namespace tomcat
