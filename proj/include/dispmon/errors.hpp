#pragma once

#include <stdexcept>
#include <string>

namespace dispmon {

// Base of every error raised by the library. The API layer maps the
// concrete type onto a status code; see http_api.cpp.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Argument outside the operation's mathematical domain.
class DomainError : public Error {
public:
  using Error::Error;
};

// Mismatched lengths, grids or sample rates.
class ShapeError : public Error {
public:
  using Error::Error;
};

// Non-finite or otherwise unusable sample values.
class DataError : public Error {
public:
  using Error::Error;
};

class NumericError : public Error {
public:
  NumericError(const std::string& what, double rcond)
      : Error(what + " (rcond estimate " + std::to_string(rcond) + ")"), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

private:
  double rcond_;
};

// Discontinuity in a sample stream. Boundaries are stream times in seconds.
class GapError : public Error {
public:
  GapError(double expected_t, double actual_t)
      : Error("stream gap: expected t=" + std::to_string(expected_t) +
              " got t=" + std::to_string(actual_t)),
        expected_t_(expected_t), actual_t_(actual_t) {}
  double expected_t() const noexcept { return expected_t_; }
  double actual_t() const noexcept { return actual_t_; }

private:
  double expected_t_;
  double actual_t_;
};

class FrameError : public Error {
public:
  using Error::Error;
};

class ConflictError : public Error {
public:
  using Error::Error;
};

class NotFoundError : public Error {
public:
  using Error::Error;
};

class PreconditionError : public Error {
public:
  using Error::Error;
};

class PersistenceError : public Error {
public:
  using Error::Error;
};

// Misconfigured generator, source descriptor or CLI input.
class UsageError : public Error {
public:
  using Error::Error;
};

}  // namespace dispmon
