#pragma once

#include <stdexcept>
#include <string>

namespace qawv {

// Violated numerical precondition (resolution, degeneracy, conjugate points...).
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

// Weak value requested between (nearly) orthogonal states.
class PoleError : public PreconditionError {
public:
    PoleError(const std::string& what, double overlap)
        : PreconditionError(what), overlap_(overlap) {}
    double overlap() const { return overlap_; }

private:
    double overlap_;
};

// Iterative solver gave up.
class ConvergenceError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

// Malformed run configuration; `path` locates the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace qawv
