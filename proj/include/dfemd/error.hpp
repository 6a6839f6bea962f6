#pragma once

#include <stdexcept>
#include <string>

namespace dfemd {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { Usage = 1, Data = 2, Numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

// Rethrows `e` as the same concrete type with `context` prepended.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string what = context + e.what();
  switch (e.kind()) {
    case ErrorKind::Usage: throw UsageError(what);
    case ErrorKind::Data: throw DataError(what);
    case ErrorKind::Numerical: throw NumericalError(what);
  }
  throw Error(e.kind(), what);
}

}  // namespace dfemd
