#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace tlmforge {

/// Hard failure carrying a stable machine-readable code such as
/// "E-EVENT-LIMIT" or "E-TIME-OVERFLOW".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// A non-fatal finding. `location` is a field name for payload checks and a
/// JSON pointer for description checks; line/column are 1-based and 0 when
/// unknown.
struct Diagnostic {
    std::string code;
    std::string location;
    std::string message;
    std::size_t line = 0;
    std::size_t column = 0;

    bool operator==(const Diagnostic&) const = default;
    auto operator<=>(const Diagnostic&) const = default;
};

} // namespace tlmforge
