#ifndef IST_ERRORS_HPP
#define IST_ERRORS_HPP

#include <stdexcept>

namespace ist {

// Malformed files, bad arguments, violated preconditions. CLI exit code 1.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Degeneracies the pipeline cannot recover from (repeated eigenvalues after
// retries, vanishing scalar fits). CLI exit code 2.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ist

#endif
