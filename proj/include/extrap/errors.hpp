#pragma once

#include <stdexcept>
#include <string>

namespace extrap {

/// Precondition violated by the caller (bad sizes, out-of-range config).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value.
class NumericOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Splitting a sample set left one side empty.
class DegenerateSplit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear system is rank deficient.
class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace extrap
