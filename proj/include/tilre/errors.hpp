#pragma once

#include <stdexcept>
#include <string>

namespace tilre {

/// Argument outside an operation's mathematical domain.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// A dense object would exceed the configured memory cap.
class ResourceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed circuit or factorization. Signals a bug, not a failed bound.
class StructuralError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// A documented precondition on an input state does not hold.
class PreconditionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A scan hit its configured upper limit without finding a solution.
class CeilingReached : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace tilre
