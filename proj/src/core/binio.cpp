#include "tomcat/core/binio.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tomcat {

namespace {

constexpr uint32_t kMagic = 0x544d434bu;   // "TMCK"
constexpr uint32_t kEndMagic = 0x4b454e44u;  // "KEND"
constexpr uint32_t kFormatVersion = 1;

size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::F32: return 4;
    case Dtype::F64: return 8;
    case Dtype::U8: return 1;
    case Dtype::I32: return 4;
    case Dtype::U64: return 8;
  }
  return 0;
}

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("archive: truncated or corrupt file: " + path);
  return v;
}

void write_str(std::ostream& out, const std::string& s) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& in, const std::string& path) {
  uint32_t n = read_pod<uint32_t>(in, path);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("archive: truncated or corrupt file: " + path);
  return s;
}

std::vector<uint8_t> to_bytes(const void* data, size_t n) {
  std::vector<uint8_t> out(n);
  std::memcpy(out.data(), data, n);
  return out;
}

}  // namespace

void ArchiveWriter::put_string(const std::string& key, const std::string& value) {
  strings_.emplace_back(key, value);
}

void ArchiveWriter::put_f32(const std::string& key, const MatrixXf& m) {
  arrays_.emplace_back(key, Array{Dtype::F32, static_cast<uint64_t>(m.rows()),
                                  static_cast<uint64_t>(m.cols()),
                                  to_bytes(m.data(), sizeof(float) * m.size())});
}

void ArchiveWriter::put_f64(const std::string& key, const MatrixXd& m) {
  arrays_.emplace_back(key, Array{Dtype::F64, static_cast<uint64_t>(m.rows()),
                                  static_cast<uint64_t>(m.cols()),
                                  to_bytes(m.data(), sizeof(double) * m.size())});
}

void ArchiveWriter::put_u8(const std::string& key, const std::vector<uint8_t>& v) {
  arrays_.emplace_back(key, Array{Dtype::U8, v.size(), 1, v});
}

void ArchiveWriter::put_i32(const std::string& key, const std::vector<int32_t>& v) {
  arrays_.emplace_back(key, Array{Dtype::I32, v.size(), 1,
                                  to_bytes(v.data(), sizeof(int32_t) * v.size())});
}

void ArchiveWriter::put_u64(const std::string& key, const std::vector<uint64_t>& v) {
  arrays_.emplace_back(key, Array{Dtype::U64, v.size(), 1,
                                  to_bytes(v.data(), sizeof(uint64_t) * v.size())});
}

void ArchiveWriter::save(const std::string& path, uint32_t schema_version) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("archive: cannot write " + path);
  write_pod(out, kMagic);
  write_pod(out, kFormatVersion);
  write_pod(out, schema_version);
  write_pod<uint32_t>(out, static_cast<uint32_t>(strings_.size()));
  for (const auto& [k, v] : strings_) {
    write_str(out, k);
    write_str(out, v);
  }
  write_pod<uint32_t>(out, static_cast<uint32_t>(arrays_.size()));
  for (const auto& [k, a] : arrays_) {
    write_str(out, k);
    write_pod<uint8_t>(out, static_cast<uint8_t>(a.dtype));
    write_pod<uint64_t>(out, a.rows);
    write_pod<uint64_t>(out, a.cols);
    out.write(reinterpret_cast<const char*>(a.bytes.data()),
              static_cast<std::streamsize>(a.bytes.size()));
  }
  write_pod(out, kEndMagic);
  if (!out) throw std::runtime_error("archive: write failed for " + path);
}

Archive Archive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("archive: cannot open " + path);
  if (read_pod<uint32_t>(in, path) != kMagic)
    throw std::runtime_error("archive: bad magic (not a tomcat archive): " + path);
  uint32_t fmt = read_pod<uint32_t>(in, path);
  if (fmt != kFormatVersion)
    throw std::runtime_error("archive: unsupported format version " + std::to_string(fmt) +
                             " in " + path);
  Archive ar;
  ar.schema_version_ = read_pod<uint32_t>(in, path);
  uint32_t n_strings = read_pod<uint32_t>(in, path);
  for (uint32_t i = 0; i < n_strings; ++i) {
    std::string k = read_str(in, path);
    ar.strings_[k] = read_str(in, path);
  }
  uint32_t n_arrays = read_pod<uint32_t>(in, path);
  for (uint32_t i = 0; i < n_arrays; ++i) {
    std::string k = read_str(in, path);
    Array a;
    a.dtype = static_cast<Dtype>(read_pod<uint8_t>(in, path));
    a.rows = read_pod<uint64_t>(in, path);
    a.cols = read_pod<uint64_t>(in, path);
    size_t n = dtype_size(a.dtype) * a.rows * a.cols;
    a.bytes.resize(n);
    in.read(reinterpret_cast<char*>(a.bytes.data()), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("archive: truncated or corrupt file: " + path);
    ar.arrays_[k] = std::move(a);
  }
  if (read_pod<uint32_t>(in, path) != kEndMagic)
    throw std::runtime_error("archive: missing end marker (corrupt file): " + path);
  return ar;
}

bool Archive::has(const std::string& key) const { return arrays_.count(key) > 0; }

const std::string& Archive::get_string(const std::string& key) const {
  auto it = strings_.find(key);
  if (it == strings_.end()) throw std::runtime_error("archive: missing string '" + key + "'");
  return it->second;
}

const Archive::Array& Archive::find(const std::string& key, Dtype want) const {
  auto it = arrays_.find(key);
  if (it == arrays_.end()) throw std::runtime_error("archive: missing array '" + key + "'");
  if (it->second.dtype != want)
    throw std::runtime_error("archive: dtype mismatch for '" + key + "'");
  return it->second;
}

MatrixXf Archive::get_f32(const std::string& key) const {
  const Array& a = find(key, Dtype::F32);
  MatrixXf m(a.rows, a.cols);
  std::memcpy(m.data(), a.bytes.data(), a.bytes.size());
  return m;
}

MatrixXd Archive::get_f64(const std::string& key) const {
  const Array& a = find(key, Dtype::F64);
  MatrixXd m(a.rows, a.cols);
  std::memcpy(m.data(), a.bytes.data(), a.bytes.size());
  return m;
}

std::vector<uint8_t> Archive::get_u8(const std::string& key) const {
  return find(key, Dtype::U8).bytes;
}

std::vector<int32_t> Archive::get_i32(const std::string& key) const {
  const Array& a = find(key, Dtype::I32);
  std::vector<int32_t> v(a.rows * a.cols);
  std::memcpy(v.data(), a.bytes.data(), a.bytes.size());
  return v;
}

std::vector<uint64_t> Archive::get_u64(const std::string& key) const {
  const Array& a = find(key, Dtype::U64);
  std::vector<uint64_t> v(a.rows * a.cols);
  std::memcpy(v.data(), a.bytes.data(), a.bytes.size());
  return v;
}

std::vector<std::string> Archive::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, _] : arrays_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

}  // namespace tomcat
