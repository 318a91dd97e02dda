#include "relcat/json_writer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "relcat/error.hpp"

namespace relcat {

std::string json_quote(std::string_view s) {
  return nlohmann::json(std::string(s))
      .dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string format_fixed(double x, int decimals) {
  if (!std::isfinite(x)) return "null";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  std::string s(buf);
  // "-0.0000" and "0.0000" must not differ.
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

void JsonWriter::newline() {
  if (!pretty_) return;
  out_.push_back('\n');
  out_.append(stack_.size() * 2, ' ');
}

void JsonWriter::before_value() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (stack_.empty()) return;
  Frame& top = stack_.back();
  if (!top.empty) out_.push_back(',');
  top.empty = false;
  newline();
}

JsonWriter& JsonWriter::begin_object() {
  before_value();
  out_.push_back('{');
  stack_.push_back({true, true});
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  const bool empty = stack_.back().empty;
  stack_.pop_back();
  if (!empty) newline();
  out_.push_back('}');
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  before_value();
  out_.push_back('[');
  stack_.push_back({false, true});
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  const bool empty = stack_.back().empty;
  stack_.pop_back();
  if (!empty) newline();
  out_.push_back(']');
  return *this;
}

JsonWriter& JsonWriter::key(std::string_view name) {
  before_value();
  out_ += json_quote(name);
  out_ += pretty_ ? ": " : ":";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(std::string_view s) {
  before_value();
  out_ += json_quote(s);
  return *this;
}

JsonWriter& JsonWriter::value(bool b) {
  before_value();
  out_ += b ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t n) {
  before_value();
  out_ += std::to_string(n);
  return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t n) {
  before_value();
  out_ += std::to_string(n);
  return *this;
}

JsonWriter& JsonWriter::null() {
  before_value();
  out_ += "null";
  return *this;
}

JsonWriter& JsonWriter::fixed(double x, int decimals) {
  before_value();
  out_ += format_fixed(x, decimals);
  return *this;
}

JsonWriter& JsonWriter::fixed(std::optional<double> x, int decimals) {
  if (!x) return null();
  return fixed(*x, decimals);
}

JsonWriter& JsonWriter::optional_string(const std::optional<std::string>& s) {
  if (!s) return null();
  return value(*s);
}

JsonWriter& JsonWriter::uint_array(const std::vector<std::size_t>& items) {
  const bool saved = pretty_;
  begin_array();
  pretty_ = false;
  for (std::size_t item : items) value(static_cast<std::uint64_t>(item));
  end_array();
  pretty_ = saved;
  return *this;
}

JsonWriter& JsonWriter::string_array(const std::vector<std::string>& items) {
  const bool saved = pretty_;
  begin_array();
  pretty_ = false;
  for (const auto& item : items) value(item);
  end_array();
  pretty_ = saved;
  return *this;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("read", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kConfig, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::kConfig, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIngest: return "ingest";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kMissingInput: return "missing_input";
    case ErrorCode::kCacheMiss: return "cache_miss";
    case ErrorCode::kAuth: return "auth";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kFormat: return "format";
  }
  return "unknown";
}

}  // namespace relcat
