#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relcat {

// Streaming JSON emitter. Keys are written in call order, doubles are written
// with a fixed number of decimals, and pretty mode uses two-space indentation.
// Output is a pure function of the call sequence.
class JsonWriter {
 public:
  explicit JsonWriter(bool pretty = false) : pretty_(pretty) {}

  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view name);

  JsonWriter& value(std::string_view s);
  JsonWriter& value(const char* s) { return value(std::string_view(s)); }
  JsonWriter& value(const std::string& s) { return value(std::string_view(s)); }
  JsonWriter& value(bool b);
  JsonWriter& value(std::int64_t n);
  JsonWriter& value(std::uint64_t n);
  JsonWriter& value(int n) { return value(static_cast<std::int64_t>(n)); }
  JsonWriter& null();
  JsonWriter& fixed(double x, int decimals = 4);
  // Writes null when the optional is empty.
  JsonWriter& fixed(std::optional<double> x, int decimals = 4);
  JsonWriter& optional_string(const std::optional<std::string>& s);
  // Scalar arrays stay on one line even in pretty mode.
  JsonWriter& string_array(const std::vector<std::string>& items);
  JsonWriter& uint_array(const std::vector<std::size_t>& items);

  const std::string& str() const { return out_; }

 private:
  void before_value();
  void newline();

  struct Frame {
    bool is_object;
    bool empty;
  };
  bool pretty_;
  bool after_key_ = false;
  std::vector<Frame> stack_;
  std::string out_;
};

std::string json_quote(std::string_view s);
std::string format_fixed(double x, int decimals = 4);

std::string read_file(const std::filesystem::path& path);
// Writes through a sibling temp file and renames, so readers never observe a
// partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

}  // namespace relcat
