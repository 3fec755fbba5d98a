#pragma once

#include <stdexcept>
#include <string>

namespace mgnets {

/// Shape, dimension or range violation in a caller-supplied argument.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A schedule or graph that does not describe a well-formed cycle.
class StructuralError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Configuration that exists in the model space but not in this engine (e.g. 3D training).
class UnsupportedConfiguration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Batch-norm evaluated with running statistics that were never populated.
class UninitializedStatistics : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite value encountered during training.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(const std::string& what, long step, std::string block)
        : std::runtime_error(what), step_(step), block_(std::move(block)) {}

    long step() const { return step_; }
    const std::string& block() const { return block_; }

private:
    long step_;
    std::string block_;
};

/// Files on disk that do not match what the caller expects (bad magic, shape mismatch).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mgnets
