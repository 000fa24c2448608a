#pragma once

#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace teamrl {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor primitive received operands of incompatible shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Bad key, type, or out-of-range value in an experiment config.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Environment misuse (invalid action, invalid team, placement failure).
class EnvError : public Error {
 public:
  using Error::Error;
};

// Checkpoint file malformed or inconsistent with the requesting network.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Asked to evaluate a policy on teams it cannot condition on
// (ID-based policy on robots without training IDs).
class UnsupportedVariantError : public Error {
 public:
  using Error::Error;
};

inline std::string strfmt(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list args2;
  va_copy(args2, args);
  const int n = std::vsnprintf(nullptr, 0, fmt, args);
  va_end(args);
  std::string out(n > 0 ? static_cast<size_t>(n) : 0, '\0');
  if (n > 0) std::vsnprintf(out.data(), out.size() + 1, fmt, args2);
  va_end(args2);
  return out;
}

}  // namespace teamrl
