#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>

namespace tlmforge::detail {

using u128 = unsigned __int128;

/// Unsigned decimal literal "123" or "1.25" as mantissa / 10^exponent.
struct Decimal {
    u128 mantissa = 0;
    unsigned exponent = 0;
};

inline std::optional<Decimal> parse_decimal(std::string_view text) {
    if (text.empty()) return std::nullopt;
    Decimal d;
    bool seen_point = false;
    bool seen_digit = false;
    for (char c : text) {
        if (c == '.') {
            if (seen_point) return std::nullopt;
            seen_point = true;
            continue;
        }
        if (c < '0' || c > '9') return std::nullopt;
        seen_digit = true;
        // 10^30 keeps every later multiplication inside 128 bits.
        if (d.mantissa > static_cast<u128>(1'000'000'000'000'000ULL) * 1'000'000'000'000ULL)
            return std::nullopt;
        d.mantissa = d.mantissa * 10 + static_cast<unsigned>(c - '0');
        if (seen_point) {
            if (++d.exponent > 18) return std::nullopt;
        }
    }
    if (!seen_digit || text.back() == '.' || text.front() == '.') return std::nullopt;
    return d;
}

inline u128 pow10(unsigned n) {
    u128 r = 1;
    while (n-- > 0) r *= 10;
    return r;
}

inline bool fits_u64(u128 v) { return v <= static_cast<u128>(UINT64_MAX); }

/// Splits "10ns" into ("10", "ns") at the first character that cannot
/// belong to a number.
inline std::pair<std::string_view, std::string_view> split_unit(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size() && ((text[i] >= '0' && text[i] <= '9') || text[i] == '.' || text[i] == '/'))
        ++i;
    return {text.substr(0, i), text.substr(i)};
}

} // namespace tlmforge::detail
