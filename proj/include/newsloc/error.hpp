#pragma once

#include <stdexcept>
#include <string>

namespace newsloc {

// Base for every error raised by the library. Stage-level code catches this
// and turns it into a nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record; `record()` is the 1-based line or row number.
class RecordError : public Error {
 public:
  RecordError(std::size_t record, const std::string& what)
      : Error("record " + std::to_string(record) + ": " + what), record_(record) {}

  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

}  // namespace newsloc
