#pragma once

#include <stdexcept>
#include <string>

namespace branchsim {

// Base class for everything this library throws on contract violations.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class CapacityExceeded : public Error {
public:
  using Error::Error;
};

class BasisError : public Error {
public:
  using Error::Error;
};

class NormError : public Error {
public:
  using Error::Error;
};

class OperatorError : public Error {
public:
  using Error::Error;
};

class SingularPotential : public Error {
public:
  using Error::Error;
};

class IntegratorDiverged : public Error {
public:
  using Error::Error;
};

class TimeOrderError : public Error {
public:
  using Error::Error;
};

class GaugeInconsistency : public Error {
public:
  using Error::Error;
};

class WeightError : public Error {
public:
  using Error::Error;
};

class SyncError : public Error {
public:
  using Error::Error;
};

class HermiticityError : public Error {
public:
  using Error::Error;
};

class IncompleteTrajectory : public Error {
public:
  using Error::Error;
};

class BoundaryError : public Error {
public:
  using Error::Error;
};

class TopologyError : public Error {
public:
  using Error::Error;
};

// Configuration / CLI input problems (exit code 2 at the tool level).
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace branchsim
