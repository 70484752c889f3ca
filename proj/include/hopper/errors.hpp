#pragma once

#include <stdexcept>
#include <string>

namespace hopper {

// Log of a quaternion too close to the pi-rotation locus (axis ambiguous).
struct AntipodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mass matrix conditioning estimate exceeded the usable range.
struct SingularMassMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contact KKT system could not be factorized.
struct SingularKKT : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reset applied to a state that does not satisfy the guard.
struct GuardViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Event bisection failed to bracket/locate a guard crossing.
struct ConvergenceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hybrid executor hit the event-count safety limit (Zeno guard).
struct MaxEventsExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// QP problem dimensions are inconsistent.
struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario file missing/invalid fields; message names the field path.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hopper
