#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "payload.hpp"

namespace tlmforge {

/// Byte-addressable target memory occupying [base, base + size).
struct Storage {
    std::uint64_t base = 0;
    std::vector<std::uint8_t> bytes;
    /// Bumped whenever outstanding DMI grants on this storage are revoked.
    std::uint64_t dmi_epoch = 0;

    Storage() = default;
    Storage(std::uint64_t base_address, std::size_t size, std::uint8_t fill = 0)
        : base(base_address), bytes(size, fill) {}

    std::uint64_t size() const { return bytes.size(); }
    /// Inclusive last address; only meaningful for non-empty storage.
    std::uint64_t last() const { return base + (bytes.empty() ? 0 : bytes.size() - 1); }

    bool contains(std::uint64_t address) const { return address >= base && address - base < bytes.size(); }

    std::uint8_t& at(std::uint64_t address) { return bytes[address - base]; }
    std::uint8_t at(std::uint64_t address) const { return bytes[address - base]; }

    void revoke_dmi() { ++dmi_epoch; }
};

namespace detail {

inline std::optional<std::uint64_t> beat_address(std::uint64_t start, std::size_t offset) {
    if (offset > UINT64_MAX - start) return std::nullopt;
    return start + offset;
}

inline bool beat_enabled(const GenericPayload& p, std::size_t i) {
    return !p.byte_enables || (*p.byte_enables)[i % p.byte_enable_length] == 0xFF;
}

inline std::optional<ResponseStatus> precheck(const GenericPayload& p, Command expected) {
    if (p.command != expected) return ResponseStatus::CommandError;
    auto diags = validate_payload(p);
    if (!diags.empty()) return status_for_invalid(diags);
    return std::nullopt;
}

} // namespace detail

/// Executes a WRITE beat by beat. Beat i lands on address + (i mod
/// streaming_width) and is written only when its cyclic enable byte is
/// 0xFF. The first beat addressing outside the storage stops the transfer
/// with ADDRESS_ERROR; earlier beats stay applied.
inline ResponseStatus apply_write(Storage& storage, const GenericPayload& p) {
    if (auto bad = detail::precheck(p, Command::Write)) return *bad;
    for (std::size_t i = 0; i < p.data_length; ++i) {
        auto addr = detail::beat_address(p.address, i % p.streaming_width);
        if (!addr || !storage.contains(*addr)) return ResponseStatus::AddressError;
        if (detail::beat_enabled(p, i)) storage.at(*addr) = p.data[i];
    }
    return ResponseStatus::Ok;
}

/// Mirror of apply_write; disabled bytes of the payload are left as they were.
inline ResponseStatus apply_read(const Storage& storage, GenericPayload& p) {
    if (auto bad = detail::precheck(p, Command::Read)) return *bad;
    for (std::size_t i = 0; i < p.data_length; ++i) {
        auto addr = detail::beat_address(p.address, i % p.streaming_width);
        if (!addr || !storage.contains(*addr)) return ResponseStatus::AddressError;
        if (detail::beat_enabled(p, i)) p.data[i] = storage.at(*addr);
    }
    return ResponseStatus::Ok;
}

/// Dispatches on the payload command; IGNORE touches nothing and succeeds.
inline ResponseStatus apply_access(Storage& storage, GenericPayload& p) {
    switch (p.command) {
    case Command::Read: return apply_read(storage, p);
    case Command::Write: return apply_write(storage, p);
    case Command::Ignore: {
        auto diags = validate_payload(p);
        return diags.empty() ? ResponseStatus::Ok : status_for_invalid(diags);
    }
    }
    return ResponseStatus::GenericError;
}

} // namespace tlmforge
