#pragma once

#include <stdexcept>
#include <string>

namespace ecg {

enum class ErrorKind {
    Format,        // malformed file contents (headers, magic, schema)
    Io,            // filesystem / truncated payloads
    Parameter,     // invalid argument values
    Degeneracy,    // geometric degeneracy (collinear points, singular system)
    Segmentation,  // no usable foreground found
    Shape,         // tensor / raster dimension mismatch
    State,         // stale or mismatched cache
    Compatibility, // incompatible model descriptors
    Horizon,       // homography denominator vanished
    Config,        // CLI / JSON configuration schema violation
    Data,          // dataset record violates an operation's requirements
    UndefinedMetric, // metric has no value (e.g. single-class AUROC)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

} // namespace ecg
