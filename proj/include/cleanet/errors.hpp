#pragma once

#include <stdexcept>
#include <string>

namespace cleanet {

/// Bad user-supplied configuration (flags, shapes requested at setup time).
/// CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or non-finite input data (CSV cells, checkpoint contents).
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape mismatch between tensors/operands at run time.
struct dimension_error : std::runtime_error {
    explicit dimension_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operation called in an invalid order (e.g. backward before forward).
struct state_error : std::runtime_error {
    explicit state_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure during training (non-finite loss or gradient).
struct training_error : std::runtime_error {
    explicit training_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem / serialization failure.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Evaluation asked of data that cannot support it (e.g. no true anomalies).
struct eval_error : std::runtime_error {
    explicit eval_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cleanet
