#ifndef CRMTEXT_ERRORS_HPP
#define CRMTEXT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace crmtext {

/// Invalid configuration, flag values, or lookups of unknown tokens.
/// Maps to process exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Failure to open, read, or write a file. Maps to exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed content in an otherwise readable file; messages carry the
/// offending line number where available. Maps to exit code 3.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values encountered during training. Maps to exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tensor dimension mismatch between arguments.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace crmtext

#endif  // CRMTEXT_ERRORS_HPP
