#include "trafficeq/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace trafficeq {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // folds -0
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, std::initializer_list<std::string_view> columns)
    : out_(out), columns_(columns.size()) {
  bool first = true;
  for (auto c : columns) {
    if (!first) out_ << ',';
    out_ << c;
    first = false;
  }
  out_ << '\n';
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& columns)
    : out_(out), columns_(columns.size()) {
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::separator() {
  if (field_ > 0) out_ << ',';
  ++field_;
}

CsvWriter& CsvWriter::operator<<(double x) {
  separator();
  out_ << format_number(x);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long x) {
  separator();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::operator<<(bool x) {
  separator();
  out_ << (x ? "true" : "false");
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view s) {
  separator();
  if (s.find_first_of(",\"\n") == std::string_view::npos) {
    out_ << s;
    return *this;
  }
  out_ << '"';
  for (char c : s) {
    if (c == '"') out_ << '"';
    out_ << c;
  }
  out_ << '"';
  return *this;
}

void CsvWriter::end_row() {
  if (field_ != columns_)
    throw std::logic_error("csv row has " + std::to_string(field_) + " fields, header has " +
                           std::to_string(columns_));
  out_ << '\n';
  field_ = 0;
  ++rows_;
}

}  // namespace trafficeq
