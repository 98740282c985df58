// errors.hpp: exception types shared across the library

#pragma once

#include <stdexcept>
#include <string>

namespace atspec {

/// Root of every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition (dimension, level, range).
struct InvalidArgument : Error {
    using Error::Error;
};

/// Population leaked into the top of the truncated Fock space.
struct TruncationError : Error {
    using Error::Error;
};

/// Integrator could not meet its tolerance or a state left the physical set.
struct IntegrationError : Error {
    using Error::Error;
};

/// Peak fit did not converge to a usable solution.
struct FitError : Error {
    using Error::Error;
};

/// Neighbouring phonon peaks are closer than the expected linewidth.
struct UnresolvablePeaks : Error {
    using Error::Error;
};

/// Malformed or inconsistent run configuration.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace atspec
