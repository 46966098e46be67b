#pragma once

#include <stdexcept>
#include <string>

namespace voltplug {

/// Invalid scenario or component configuration.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Input outside an operation's documented domain (e.g. ADC code out of range).
struct domain_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Operation needs more samples/cycles than the input provides.
struct insufficient_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Two series that should be co-registered are not.
struct alignment_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// No voltage crossing found to pair a current crossing with.
struct pairing_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerically inconsistent inputs (e.g. apparent power below active power).
struct inconsistency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace voltplug
