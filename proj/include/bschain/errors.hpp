#pragma once

#include <stdexcept>
#include <string>

namespace bschain {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A profile measure with non-positive compressibility at some grid point.
class InvalidProfile : public Error {
 public:
  InvalidProfile(const std::string& what, long site) : Error(what), site_(site) {}
  long site() const noexcept { return site_; }

 private:
  long site_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// The nearest-neighbour correlation stencil would alias the diagonal (N < 5).
class StencilWrap : public Error {
 public:
  using Error::Error;
};

class IntegratorFailure : public Error {
 public:
  IntegratorFailure(const std::string& what, double achieved) : Error(what), achieved_(achieved) {}
  double achieved_error() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class DependencyError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class SimulationDiverged : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment specification; `field` is the offending key path.
class UsageError : public Error {
 public:
  UsageError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace bschain
