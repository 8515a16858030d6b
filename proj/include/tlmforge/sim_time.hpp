#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

#include "detail/decimal.hpp"
#include "error.hpp"

namespace tlmforge {

/// Simulated time as an unsigned count of picoseconds. Arithmetic that
/// would wrap throws instead.
class SimTime {
public:
    constexpr SimTime() = default;
    constexpr explicit SimTime(std::uint64_t ps) : ps_(ps) {}

    static constexpr SimTime max() { return SimTime(std::numeric_limits<std::uint64_t>::max()); }

    static SimTime from_ns(std::uint64_t ns) {
        if (ns > std::numeric_limits<std::uint64_t>::max() / 1000)
            throw Error("E-TIME-OVERFLOW", "nanosecond value out of range");
        return SimTime(ns * 1000);
    }

    constexpr std::uint64_t ps() const { return ps_; }
    constexpr bool is_zero() const { return ps_ == 0; }

    SimTime& operator+=(SimTime other) {
        if (ps_ > std::numeric_limits<std::uint64_t>::max() - other.ps_)
            throw Error("E-TIME-OVERFLOW", "simulated time overflow");
        ps_ += other.ps_;
        return *this;
    }

    friend SimTime operator+(SimTime a, SimTime b) { return a += b; }

    friend SimTime operator-(SimTime a, SimTime b) {
        if (b.ps_ > a.ps_) throw Error("E-TIME-UNDERFLOW", "negative simulated time");
        return SimTime(a.ps_ - b.ps_);
    }

    friend SimTime operator*(SimTime a, std::uint64_t n) {
        if (n != 0 && a.ps_ > std::numeric_limits<std::uint64_t>::max() / n)
            throw Error("E-TIME-OVERFLOW", "simulated time overflow");
        return SimTime(a.ps_ * n);
    }

    constexpr auto operator<=>(const SimTime&) const = default;

private:
    std::uint64_t ps_ = 0;
};

namespace literals {
constexpr SimTime operator""_ps(unsigned long long v) { return SimTime(v); }
constexpr SimTime operator""_ns(unsigned long long v) { return SimTime(v * 1000); }
} // namespace literals

namespace detail {
struct TimeUnit {
    std::string_view suffix;
    std::uint64_t ps;
};
inline constexpr std::array<TimeUnit, 5> kTimeUnits{{
    {"s", 1'000'000'000'000ULL},
    {"ms", 1'000'000'000ULL},
    {"us", 1'000'000ULL},
    {"ns", 1'000ULL},
    {"ps", 1ULL},
}};
} // namespace detail

/// Parses "10ns", "500ps", "1.5us", ... A value that is not a whole number
/// of picoseconds, or that overflows, yields nullopt.
inline std::optional<SimTime> parse_duration(std::string_view text) {
    auto [number, unit] = detail::split_unit(text);
    std::uint64_t scale = 0;
    for (const auto& u : detail::kTimeUnits)
        if (unit == u.suffix) scale = u.ps;
    if (scale == 0) return std::nullopt;
    auto dec = detail::parse_decimal(number);
    if (!dec) return std::nullopt;
    detail::u128 divisor = detail::pow10(dec->exponent);
    detail::u128 scaled = dec->mantissa * scale;
    if (dec->mantissa != 0 && scaled / dec->mantissa != scale) return std::nullopt;
    if (scaled % divisor != 0) return std::nullopt;
    detail::u128 ps = scaled / divisor;
    if (!detail::fits_u64(ps)) return std::nullopt;
    return SimTime(static_cast<std::uint64_t>(ps));
}

/// Canonical textual form using the largest unit that divides exactly,
/// e.g. "16ns", "1500ps", "0ps". Always accepted by parse_duration.
inline std::string to_string(SimTime t) {
    if (t.is_zero()) return "0ps";
    for (const auto& u : detail::kTimeUnits)
        if (t.ps() % u.ps == 0) return std::to_string(t.ps() / u.ps) + std::string(u.suffix);
    return std::to_string(t.ps()) + "ps";
}

/// Nanoseconds with up to three decimals and no trailing zeros: 16000 ps ->
/// "16", 1500 ps -> "1.5", 1 ps -> "0.001".
inline std::string format_ns(SimTime t) {
    std::string out = std::to_string(t.ps() / 1000);
    auto frac = t.ps() % 1000;
    if (frac != 0) {
        std::string digits = std::to_string(frac);
        digits.insert(0, 3 - digits.size(), '0');
        while (digits.back() == '0') digits.pop_back();
        out += '.' + digits;
    }
    return out;
}

inline std::ostream& operator<<(std::ostream& os, SimTime t) { return os << t.ps() << "ps"; }

} // namespace tlmforge
