#pragma once

#include <stdexcept>
#include <string>

namespace eegret {

// Base of every error thrown by the library. Each subclass names one failure
// category so callers (and the CLI) can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unreadable container header.
class FormatError : public Error { using Error::Error; };
// Header and payload disagree (byte counts, shapes).
class IntegrityError : public Error { using Error::Error; };
// Values that violate numeric preconditions (NaN, zero norm, constant row).
class DataError : public Error { using Error::Error; };
// Inconsistent configuration (missing stream, empty split, bad policy).
class ConfigError : public Error { using Error::Error; };
// Out-of-range argument to a single operation.
class ParameterError : public Error { using Error::Error; };
// Tensor dimensions that do not line up.
class ShapeError : public Error { using Error::Error; };
// Operation invoked in the wrong forward mode.
class ModeError : public Error { using Error::Error; };
// Unknown identifier.
class LookupError : public Error { using Error::Error; };
// Filesystem failure; message always carries the path.
class IoError : public Error { using Error::Error; };

}  // namespace eegret
