#pragma once

#include <stdexcept>
#include <string>

namespace ensen {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Conforming dimensions were violated (matrix/vector products, map comparisons).
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

// The (possibly regularized) normal system is numerically singular; the
// ensemble members have lost linear independence.
class SingularSystem : public Error {
public:
  using Error::Error;
};

// Gram-Schmidt annihilated the vector: the candidate is linearly dependent
// on the existing set.
class DegenerateVector : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// A forward model produced a non-finite value.
class BlowUp : public Error {
public:
  using Error::Error;
};

// Goal map has zero infinity norm; weighting must be skipped by the caller.
class ZeroGoalMap : public Error {
public:
  using Error::Error;
};

class RetriesExhausted : public Error {
public:
  using Error::Error;
};

// Time windows do not tile the horizon.
class WindowMisalignment : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace ensen
