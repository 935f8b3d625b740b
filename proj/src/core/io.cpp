#include "reeb/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace reeb {

namespace {

void emit(const Json& j, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(2 * depth + 2), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        emit(it.value(), depth + 1, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        emit(e, depth + 1, out);
      }
      out += flat ? "]" : "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", x);
      std::string s(buf);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  emit(j, 0, out);
  out += "\n";
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Validation, "cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) throw Error(ErrorKind::Internal, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorKind::Internal, "cannot rename onto '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail_validation("cannot read '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Json read_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail_validation("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Internal, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Fields::Fields(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
  if (!obj_.is_object())
    fail_validation("field '" + (path_.empty() ? std::string("<root>") : path_) + "' must be an object");
}

std::string Fields::path(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

bool Fields::has(const std::string& key) const {
  used_.insert(key);
  return obj_.contains(key);
}

const Json& Fields::at(const std::string& key) const {
  used_.insert(key);
  if (!obj_.contains(key)) fail_validation("missing field '" + path(key) + "'");
  return obj_.at(key);
}

const Json* Fields::raw(const std::string& key) const {
  used_.insert(key);
  return obj_.contains(key) ? &obj_.at(key) : nullptr;
}

double Fields::number(const std::string& key) const {
  const Json& v = at(key);
  if (!v.is_number()) fail_validation("field '" + path(key) + "' must be a number");
  return v.get<double>();
}

double Fields::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

int Fields::integer(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_number_integer()) fail_validation("field '" + path(key) + "' must be an integer");
  return v.get<int>();
}

bool Fields::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_boolean()) fail_validation("field '" + path(key) + "' must be true or false");
  return v.get<bool>();
}

std::string Fields::text(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_string()) fail_validation("field '" + path(key) + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> Fields::numbers(const std::string& key,
                                    const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_array()) fail_validation("field '" + path(key) + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail_validation("field '" + path(key) + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> Fields::integers(const std::string& key, const std::vector<int>& fallback) const {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_array()) fail_validation("field '" + path(key) + "' must be an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer())
      fail_validation("field '" + path(key) + "' must be an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

void Fields::finish() const {
  for (auto it = obj_.begin(); it != obj_.end(); ++it)
    if (!used_.count(it.key())) fail_validation("unknown field '" + path(it.key()) + "'");
}

}  // namespace reeb
