#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace genpol {

// Sectioned key=value configuration. Every key has a default; files and
// overrides may only set known keys. Keys are addressed as "section.key".
class Config {
 public:
  Config();

  // INI-style file: [section] headers, key = value lines, '#' or ';' comments.
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  // "section.key=value"
  void apply_override(const std::string& assignment);

  const std::string& str(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // non-negative integer
  std::uint64_t seed(const std::string& key) const;
  std::vector<std::size_t> sizes(const std::string& key) const;  // comma list

  // Fully resolved config in the file syntax, sections in a fixed order.
  std::string render() const;

  struct Entry {
    std::string key;
    std::string value;
    std::string help;
  };
  static const std::vector<Entry>& schema();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace genpol
