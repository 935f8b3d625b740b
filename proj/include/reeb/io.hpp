#pragma once

#include "reeb/models.hpp"

#include <set>
#include <string>
#include <vector>

namespace reeb {

/// JSON text with every floating-point number at 17 significant digits,
/// two-space indentation and object keys in sorted order.
std::string dump_json(const Json& j);

/// Writes to `path` through a temporary file in the same directory and a
/// rename, so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);
Json read_json_file(const std::string& path);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& bytes);

/// Typed reader over one JSON object. Every accessor records the key, and
/// finish() rejects keys that were never read, so typos surface as
/// validation errors naming the dotted field path.
class Fields {
 public:
  Fields(const Json& obj, std::string path);

  bool has(const std::string& key) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback) const;
  /// Raw value, or nullptr when absent.
  const Json* raw(const std::string& key) const;
  std::string path(const std::string& key) const;
  void finish() const;

 private:
  const Json& at(const std::string& key) const;
  const Json& obj_;
  std::string path_;
  mutable std::set<std::string> used_;
};

}  // namespace reeb
