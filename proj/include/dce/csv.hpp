#pragma once

// Locale-independent CSV output with a '#' metadata header.

#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dce {

inline constexpr std::string_view kVersion = "1.0.0";

/// Shortest representation with at most `precision` significant digits,
/// always with '.' as decimal separator.
std::string format_number(double v, int precision = 9);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out, int precision = 9);

  /// Writes "# key=value, key=value, ..." followed by the artifact version.
  void metadata(const std::vector<std::pair<std::string, std::string>>& entries);
  void header(const std::vector<std::string>& columns);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(int v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(std::string_view v);
  void end_row();

  int precision() const noexcept { return precision_; }

 private:
  void separator();

  std::ostream& out_;
  int precision_;
  bool row_started_ = false;
};

}  // namespace dce
