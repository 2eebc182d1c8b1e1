#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace holotrack {

/// Invalid configuration or parameters (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed, missing or inconsistent input data (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using WarningSink = std::function<void(const std::string&)>;

/// Replaces the process-wide warning sink. Passing an empty function restores
/// the default, which writes to stderr. Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);

void warn(const std::string& message);

}  // namespace holotrack
