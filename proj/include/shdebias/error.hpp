// Error taxonomy shared across the library.
//
// Every failure surfaces as a subclass of Error so callers (and the CLI
// driver) can distinguish usage mistakes from data problems without string
// matching.  Messages always carry enough context (path, id, value) to act on.
#pragma once

#include <stdexcept>
#include <string>

namespace shdebias {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A documented precondition of an operation was violated by the caller.
struct PreconditionError : Error {
    using Error::Error;
};

// Filesystem- or OS-level I/O failure (missing file, unreadable, ...).
struct IoError : Error {
    using Error::Error;
};

// Input parsed but its contents are malformed or unsupported.
struct FormatError : Error {
    using Error::Error;
};

// A least-squares design matrix was rank deficient.
struct SingularFitError : Error {
    using Error::Error;
};

// A coefficient vector cannot be DC-normalized (|c0| ~ 0).
struct DegenerateLightError : Error {
    using Error::Error;
};

// A skin-tone class was requested that the data does not contain.
struct UnknownClassError : Error {
    using Error::Error;
};

}  // namespace shdebias
