#pragma once

#include <stdexcept>
#include <string>

namespace hyper3d {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad shape specs, configs, checkpoint/config mismatches,
/// unreadable files. The CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computation that could not complete (non-finite loss, degenerate geometry
/// discovered mid-pipeline). The CLI maps these to exit code 3.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace hyper3d
