#pragma once

#include <stdexcept>
#include <string>

namespace wrht {

/// @brief Failure to read, parse, or write an external artifact (CSV, model
/// file, JSON output).  The CLI maps this to exit code 2.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// @brief Input data that is syntactically fine but numerically unusable
/// (e.g. a singular covariance from degenerate training samples).  Mapped to
/// exit code 2 like other input-file problems, while bad *parameters*
/// (negative radius, empty grid, ...) raise std::invalid_argument and map to
/// exit code 1.
class data_error : public io_error {
 public:
  explicit data_error(const std::string& what) : io_error(what) {}
};

}  // namespace wrht
