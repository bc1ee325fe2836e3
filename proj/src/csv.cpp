#include "dce/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "dce/errors.hpp"

namespace dce {

std::string format_number(double v, int precision) {
  if (precision < 1 || precision > 17) throw ValidationError("precision must be in [1, 17]");
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, precision);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, int precision) : out_(out), precision_(precision) {
  format_number(0.0, precision);  // validates precision
}

void CsvWriter::metadata(const std::vector<std::pair<std::string, std::string>>& entries) {
  out_ << "# ";
  for (const auto& [k, v] : entries) out_ << k << '=' << v << ", ";
  out_ << "version=" << kVersion << '\n';
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

void CsvWriter::separator() {
  if (row_started_) out_ << ',';
  row_started_ = true;
}

CsvWriter& CsvWriter::operator<<(double v) {
  separator();
  out_ << format_number(v, precision_);
  return *this;
}

CsvWriter& CsvWriter::operator<<(int v) {
  separator();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
  separator();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view v) {
  separator();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_started_ = false;
}

}  // namespace dce
