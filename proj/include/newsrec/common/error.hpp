#pragma once

#include <stdexcept>
#include <string>

namespace newsrec {

// Fatal error raised by any module. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace newsrec
