#pragma once

#include <stdexcept>
#include <string>

namespace verge {

// Raised for malformed input data (bad files, inconsistent records). The CLI
// maps it to exit code 2.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raised when an operation is called outside its contract.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace verge
