#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

#include "detail/decimal.hpp"

namespace tlmforge {

/// Non-negative exact rational, always stored in lowest terms with den > 0.
/// Used for CPU frequencies (GHz) and bandwidths (bytes per ns).
class Ratio {
public:
    constexpr Ratio() = default;
    constexpr Ratio(std::uint64_t whole) : num_(whole), den_(1) {} // NOLINT: implicit from integer
    Ratio(std::uint64_t num, std::uint64_t den) : num_(num), den_(den) {
        if (den_ == 0) {
            num_ = 0;
            den_ = 1;
            return;
        }
        auto g = std::gcd(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    constexpr std::uint64_t num() const { return num_; }
    constexpr std::uint64_t den() const { return den_; }
    constexpr bool positive() const { return num_ > 0; }
    constexpr bool is_integer() const { return den_ == 1; }

    bool operator==(const Ratio&) const = default;
    std::strong_ordering operator<=>(const Ratio& o) const {
        return static_cast<detail::u128>(num_) * o.den_ <=> static_cast<detail::u128>(o.num_) * den_;
    }

    /// Exact scaling by num/den; nullopt if the reduced result leaves 64 bits.
    std::optional<Ratio> scaled(std::uint64_t mul, std::uint64_t div) const {
        detail::u128 n = static_cast<detail::u128>(num_) * mul;
        detail::u128 d = static_cast<detail::u128>(den_) * div;
        return reduce(n, d);
    }

    static std::optional<Ratio> reduce(detail::u128 n, detail::u128 d) {
        if (d == 0) return std::nullopt;
        detail::u128 a = n, b = d;
        while (b != 0) {
            auto t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            n /= a;
            d /= a;
        }
        if (n == 0) d = 1;
        if (!detail::fits_u64(n) || !detail::fits_u64(d)) return std::nullopt;
        return Ratio(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(d));
    }

private:
    std::uint64_t num_ = 0;
    std::uint64_t den_ = 1;
};

/// "4", "1.25" or "4/3".
inline std::optional<Ratio> parse_ratio(std::string_view text) {
    auto slash = text.find('/');
    if (slash != std::string_view::npos) {
        auto n = detail::parse_decimal(text.substr(0, slash));
        auto d = detail::parse_decimal(text.substr(slash + 1));
        if (!n || !d || n->exponent != 0 || d->exponent != 0) return std::nullopt;
        return Ratio::reduce(n->mantissa, d->mantissa);
    }
    auto dec = detail::parse_decimal(text);
    if (!dec) return std::nullopt;
    return Ratio::reduce(dec->mantissa, detail::pow10(dec->exponent));
}

inline std::string to_string(const Ratio& r) {
    if (r.is_integer()) return std::to_string(r.num());
    return std::to_string(r.num()) + "/" + std::to_string(r.den());
}

/// Frequency literal ("4GHz", "250MHz", "1.5GHz", "4/3GHz") in GHz.
inline std::optional<Ratio> parse_frequency(std::string_view text) {
    auto [number, unit] = detail::split_unit(text);
    std::uint64_t div = 0;
    if (unit == "GHz") div = 1;
    else if (unit == "MHz") div = 1'000;
    else if (unit == "kHz") div = 1'000'000;
    else if (unit == "Hz") div = 1'000'000'000;
    if (div == 0) return std::nullopt;
    auto r = parse_ratio(number);
    if (!r) return std::nullopt;
    return r->scaled(1, div);
}

inline std::string format_frequency(const Ratio& ghz) {
    struct Unit {
        const char* suffix;
        std::uint64_t mul;
    };
    for (auto u : {Unit{"GHz", 1}, Unit{"MHz", 1'000}, Unit{"kHz", 1'000'000}, Unit{"Hz", 1'000'000'000}}) {
        auto v = ghz.scaled(u.mul, 1);
        if (v && v->is_integer()) return std::to_string(v->num()) + u.suffix;
    }
    return to_string(ghz) + "GHz";
}

/// Bandwidth literal in bytes per ns: "512B/ns", "1GB/s" (= 1 B/ns), "250MB/s".
inline std::optional<Ratio> parse_bandwidth(std::string_view text) {
    auto [number, unit] = detail::split_unit(text);
    std::uint64_t div = 0;
    if (unit == "B/ns" || unit == "GB/s") div = 1;
    else if (unit == "MB/s") div = 1'000;
    else if (unit == "kB/s") div = 1'000'000;
    if (div == 0) return std::nullopt;
    auto r = parse_ratio(number);
    if (!r) return std::nullopt;
    return r->scaled(1, div);
}

inline std::string format_bandwidth(const Ratio& bytes_per_ns) { return to_string(bytes_per_ns) + "B/ns"; }

} // namespace tlmforge
