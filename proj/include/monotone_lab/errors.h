#pragma once

#include <stdexcept>
#include <string>

namespace monotone_lab {

/// Raised when an argument breaks a documented precondition (variant
/// mismatch, invalid probabilities, malformed matrices, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The learner has no minimizer inside its hypothesis class for this sample.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The exact engine refuses to enumerate more compositions than its cap.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace monotone_lab
