#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

// RFC 4180 reading and writing: quoted fields may hold commas, quotes and
// newlines.
namespace newsloc::csv {

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Reads the next record into `row`; false at end of input.
  bool next(std::vector<std::string>& row);

  // 1-based line on which the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-tripping decimal form of a double.
std::string format_double(double v);

}  // namespace newsloc::csv
