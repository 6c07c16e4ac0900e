#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace trafficeq {

/// Shortest decimal that round-trips to the same double; "nan", "inf", "-inf" otherwise.
std::string format_number(double x);

/// Comma-separated writer; the header is written on construction.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::initializer_list<std::string_view> columns);
  CsvWriter(std::ostream& out, const std::vector<std::string>& columns);

  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(long x);
  CsvWriter& operator<<(int x) { return *this << static_cast<long>(x); }
  CsvWriter& operator<<(bool x);
  CsvWriter& operator<<(std::string_view s);
  CsvWriter& operator<<(const char* s) { return *this << std::string_view(s); }
  CsvWriter& operator<<(const std::string& s) { return *this << std::string_view(s); }

  /// Ends the current row; throws if the field count does not match the header.
  void end_row();

  std::size_t rows() const noexcept { return rows_; }

 private:
  void separator();

  std::ostream& out_;
  std::size_t columns_;
  std::size_t field_ = 0;
  std::size_t rows_ = 0;
};

}  // namespace trafficeq
