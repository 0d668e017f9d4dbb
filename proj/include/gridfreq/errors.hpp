#pragma once

#include <stdexcept>
#include <string>

namespace gridfreq {

/// Input that violates a model invariant (bad sign, disconnected graph, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a trustworthy answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridfreq
