#pragma once

#include <stdexcept>

namespace realcl {

// Failure taxonomy shared across the library. Each type names the contract
// it enforces; callers catch the specific type or the common base.

struct DegenerateNorm : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidShape : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyBatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySplit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingleClass : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace realcl
