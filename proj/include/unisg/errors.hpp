#pragma once

#include <stdexcept>
#include <string>

namespace unisg {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Scene text format errors, with 1-based source position.
struct ParseError : Error {
    ParseError(std::string msg, int line_, int col_)
        : Error(std::move(msg) + " (line " + std::to_string(line_) + ", col " +
                std::to_string(col_) + ")"),
          line(line_), col(col_) {}
    int line = 0;
    int col = 0;
};

/// Transform representation conversions (non-TRS matrix, non-rigid payloads, ...).
struct ConversionError : Error {
    using Error::Error;
};

/// Raised when training aborts (non-finite gradients, bad dataset).
struct TrainError : Error {
    using Error::Error;
};

}  // namespace unisg
