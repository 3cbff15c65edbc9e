#pragma once
#include <stdexcept>
#include <string>

namespace epvs {

// Base class for all toolkit errors. Subclasses distinguish user/input
// problems (validation) from environment problems (runtime) so the CLI can
// map them to exit codes.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// -- validation-type errors ---------------------------------------------------

struct shape_error : error {
    using error::error;
};

struct domain_error : error {
    using error::error;
};

struct geometry_error : error {
    using error::error;
};

struct spec_error : error {
    using error::error;
};

struct config_error : error {
    using error::error;
};

struct degenerate_input_error : error {
    using error::error;
};

// -- runtime-type errors ------------------------------------------------------

struct io_error : error {
    using error::error;
};

struct format_error : error {
    using error::error;
};

struct unsupported_dtype_error : error {
    using error::error;
};

struct truncation_error : error {
    using error::error;
};

struct placement_error : error {
    using error::error;
};

inline bool is_validation_error(const error& e) {
    return dynamic_cast<const shape_error*>(&e) != nullptr ||
           dynamic_cast<const domain_error*>(&e) != nullptr ||
           dynamic_cast<const geometry_error*>(&e) != nullptr ||
           dynamic_cast<const spec_error*>(&e) != nullptr ||
           dynamic_cast<const config_error*>(&e) != nullptr ||
           dynamic_cast<const degenerate_input_error*>(&e) != nullptr;
}

} // namespace epvs
