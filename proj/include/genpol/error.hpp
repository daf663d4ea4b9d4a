#pragma once

#include <stdexcept>
#include <string>

namespace genpol {

enum class ErrorKind {
  Shape,
  Domain,      // argument outside a function's mathematical domain
  Numeric,     // NaN/Inf produced, integration or training diverged
  Config,
  Io,
  Unsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::Shape, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};
struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& w) : Error(ErrorKind::Unsupported, w) {}
};

// Thrown by the ODE solver; carries the step at which the state went non-finite.
struct DivergenceError : NumericError {
  DivergenceError(const std::string& w, int step) : NumericError(w), step(step) {}
  int step;
};

}  // namespace genpol
