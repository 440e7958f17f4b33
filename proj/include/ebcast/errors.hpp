#pragma once

#include <stdexcept>
#include <string>

namespace ebcast {

/// Root of all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class violation {
    order,       // eps1 >= eps2
    range,       // a probability / distortion / latency outside its domain
    joint_mass,  // a joint erasure mass outside [0, 1]
};

/// Invalid channel parameters, demands or operation arguments.
struct validation_error : error {
    violation kind;
    validation_error(violation k, const std::string& what) : error(what), kind(k) {}
};

/// An equation referenced a source index the bank does not track.
struct unknown_index_error : error {
    using error::error;
};

/// The demanded distortion pair cannot be covered by the hybrid scheme
/// (eps2 - d2 exceeds the maximum load k1 + k2 + k3).
struct infeasible_error : error {
    using error::error;
};

/// A simulation exceeded its slot cap; indicates a scheme bug, not bad luck.
struct runtime_exceeded_error : error {
    using error::error;
};

/// Broken internal invariant (e.g. a contradictory GF(2) equation, which is
/// impossible when every equation derives from one true source).
struct internal_error : error {
    using error::error;
};

}  // namespace ebcast
