#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "genpol/tensor.hpp"

namespace genpol::detail {

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
  }
  void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  // Values are always stored as f64 so files do not depend on the build's Real.
  void values(const Tensor& t) {
    for (Real v : t.values()) {
      const double d = v;
      raw(&d, sizeof d);
    }
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path + "'");
  }
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw IoError("'" + path_ + "' is truncated");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > (1ULL << 30)) throw IoError("'" + path_ + "' has a corrupt string length");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  Tensor values(Shape shape) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) {
      double d;
      raw(&d, sizeof d);
      v = static_cast<Real>(d);
    }
    return t;
  }
  void magic(const char (&expect)[5]) {
    char m[4];
    raw(m, 4);
    if (std::string(m, 4) != std::string(expect, 4))
      throw IoError("'" + path_ + "' is not a " + std::string(expect, 4) + " file");
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace genpol::detail
