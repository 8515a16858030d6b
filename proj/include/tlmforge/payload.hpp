#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace tlmforge {

enum class Command { Read, Write, Ignore };

enum class ResponseStatus {
    Incomplete,
    Ok,
    AddressError,
    CommandError,
    BurstError,
    ByteEnableError,
    GenericError,
};

enum class Phase { BeginReq, EndReq, BeginResp, EndResp };

inline constexpr std::array kCommandNames{
    std::pair{Command::Read, std::string_view{"READ"}},
    std::pair{Command::Write, std::string_view{"WRITE"}},
    std::pair{Command::Ignore, std::string_view{"IGNORE"}},
};

inline constexpr std::array kStatusNames{
    std::pair{ResponseStatus::Incomplete, std::string_view{"INCOMPLETE"}},
    std::pair{ResponseStatus::Ok, std::string_view{"OK"}},
    std::pair{ResponseStatus::AddressError, std::string_view{"ADDRESS_ERROR"}},
    std::pair{ResponseStatus::CommandError, std::string_view{"COMMAND_ERROR"}},
    std::pair{ResponseStatus::BurstError, std::string_view{"BURST_ERROR"}},
    std::pair{ResponseStatus::ByteEnableError, std::string_view{"BYTE_ENABLE_ERROR"}},
    std::pair{ResponseStatus::GenericError, std::string_view{"GENERIC_ERROR"}},
};

inline constexpr std::array kPhaseNames{
    std::pair{Phase::BeginReq, std::string_view{"BEGIN_REQ"}},
    std::pair{Phase::EndReq, std::string_view{"END_REQ"}},
    std::pair{Phase::BeginResp, std::string_view{"BEGIN_RESP"}},
    std::pair{Phase::EndResp, std::string_view{"END_RESP"}},
};

namespace detail {
template <typename Table, typename E>
std::string_view name_of(const Table& table, E value) {
    for (const auto& [v, name] : table)
        if (v == value) return name;
    return "?";
}

template <typename E, typename Table>
std::optional<E> value_of(const Table& table, std::string_view name) {
    for (const auto& [v, n] : table)
        if (n == name) return v;
    return std::nullopt;
}
} // namespace detail

inline std::string_view to_string(Command c) { return detail::name_of(kCommandNames, c); }
inline std::string_view to_string(ResponseStatus s) { return detail::name_of(kStatusNames, s); }
inline std::string_view to_string(Phase p) { return detail::name_of(kPhaseNames, p); }

inline std::optional<Command> command_from_string(std::string_view s) {
    return detail::value_of<Command>(kCommandNames, s);
}
inline std::optional<ResponseStatus> status_from_string(std::string_view s) {
    return detail::value_of<ResponseStatus>(kStatusNames, s);
}

/// The transaction object carried from initiator to target.
///
/// Extensions are keyed by a string kind and carried as opaque bytes; the
/// built-in components ignore kinds they do not know.
struct GenericPayload {
    Command command = Command::Ignore;
    std::uint64_t address = 0;
    std::vector<std::uint8_t> data;
    std::size_t data_length = 0;
    std::optional<std::vector<std::uint8_t>> byte_enables;
    std::size_t byte_enable_length = 0;
    std::size_t streaming_width = 0;
    bool dmi_allowed = false;
    ResponseStatus response_status = ResponseStatus::Incomplete;
    std::map<std::string, std::string> extensions;

    bool operator==(const GenericPayload&) const = default;

    bool is_response_ok() const { return response_status == ResponseStatus::Ok; }

    void set_extension(std::string kind, std::string value) { extensions[std::move(kind)] = std::move(value); }

    const std::string* extension(std::string_view kind) const {
        auto it = extensions.find(std::string(kind));
        return it == extensions.end() ? nullptr : &it->second;
    }
};

/// Extension kind under which the simulator tags each transaction with its id.
inline constexpr std::string_view kTxnIdExtension = "tlmforge.txn_id";

inline std::uint64_t txn_id_of(const GenericPayload& p) {
    if (const auto* v = p.extension(kTxnIdExtension)) return std::stoull(*v);
    return 0;
}

/// Streaming width defaults to the data length (no streaming).
inline GenericPayload make_write(std::uint64_t address, std::vector<std::uint8_t> data) {
    GenericPayload p;
    p.command = Command::Write;
    p.address = address;
    p.data_length = data.size();
    p.streaming_width = std::max<std::size_t>(data.size(), 1);
    p.data = std::move(data);
    return p;
}

inline GenericPayload make_read(std::uint64_t address, std::size_t length) {
    GenericPayload p;
    p.command = Command::Read;
    p.address = address;
    p.data.assign(length, 0);
    p.data_length = length;
    p.streaming_width = std::max<std::size_t>(length, 1);
    return p;
}

/// Checks every structural payload invariant. Each violated invariant
/// contributes exactly one diagnostic:
///   E-DATA-LENGTH    data_length exceeds the data buffer
///   E-SW-ZERO        streaming_width is 0
///   E-SW-DIVIDE      data_length is not a multiple of streaming_width
///   E-ENABLE-VALUE   an enable byte other than 0x00 / 0xFF
///   E-ENABLE-LENGTH  byte_enable_length is 0 or exceeds the enable buffer
inline std::vector<Diagnostic> validate_payload(const GenericPayload& p) {
    std::vector<Diagnostic> out;
    if (p.data_length > p.data.size())
        out.push_back({"E-DATA-LENGTH", "data_length",
                       "data_length " + std::to_string(p.data_length) + " exceeds data buffer of " +
                           std::to_string(p.data.size())});
    if (p.streaming_width == 0) {
        out.push_back({"E-SW-ZERO", "streaming_width", "streaming_width must be positive"});
    } else if (p.data_length % p.streaming_width != 0) {
        out.push_back({"E-SW-DIVIDE", "streaming_width",
                       "data_length " + std::to_string(p.data_length) + " is not a multiple of streaming_width " +
                           std::to_string(p.streaming_width)});
    }
    if (p.byte_enables) {
        const auto& be = *p.byte_enables;
        if (std::any_of(be.begin(), be.end(), [](std::uint8_t b) { return b != 0x00 && b != 0xFF; }))
            out.push_back({"E-ENABLE-VALUE", "byte_enables", "enable bytes must be 0x00 or 0xFF"});
        if (p.byte_enable_length == 0 || p.byte_enable_length > be.size())
            out.push_back({"E-ENABLE-LENGTH", "byte_enable_length",
                           "byte_enable_length must be in 1.." + std::to_string(be.size())});
    }
    return out;
}

/// Response status a callee reports for a structurally invalid payload.
inline ResponseStatus status_for_invalid(const std::vector<Diagnostic>& diags) {
    if (diags.empty()) return ResponseStatus::Ok;
    for (const auto& d : diags)
        if (!d.code.starts_with("E-ENABLE")) return ResponseStatus::BurstError;
    return ResponseStatus::ByteEnableError;
}

/// Independent copy for fan-out. The copy starts over as INCOMPLETE.
inline GenericPayload deep_copy_payload(const GenericPayload& p) {
    GenericPayload copy = p;
    copy.response_status = ResponseStatus::Incomplete;
    return copy;
}

} // namespace tlmforge
