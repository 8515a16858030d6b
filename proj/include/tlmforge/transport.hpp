#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "memory.hpp"
#include "payload.hpp"
#include "sim_time.hpp"

namespace tlmforge {

enum class SyncStatus { Accepted, Updated, Completed };
enum class Direction { Forward, Backward };

inline std::string_view to_string(SyncStatus s) {
    switch (s) {
    case SyncStatus::Accepted: return "ACCEPTED";
    case SyncStatus::Updated: return "UPDATED";
    case SyncStatus::Completed: return "COMPLETED";
    }
    return "?";
}

inline std::string_view to_string(Direction d) { return d == Direction::Forward ? "fw" : "bw"; }

/// Base-protocol bookkeeping for one connection.
struct ProtocolState {
    bool outstanding_request = false;
    bool outstanding_response = false;
    std::optional<Phase> last_phase;

    /// Request accepted with END_REQ, response not begun yet.
    bool awaiting_response() const {
        return !outstanding_request && !outstanding_response && last_phase == Phase::EndReq;
    }
    bool idle() const { return !outstanding_request && !outstanding_response && !awaiting_response(); }

    bool operator==(const ProtocolState&) const = default;
};

inline std::string describe(const ProtocolState& s) {
    if (s.outstanding_request) return "request-outstanding";
    if (s.outstanding_response) return "response-outstanding";
    if (s.awaiting_response()) return "awaiting-response";
    return "idle";
}

struct NbStepResult {
    std::optional<SyncStatus> status;
    ProtocolState state;
    std::string error;

    bool ok() const { return status.has_value(); }
};

/// One step of the base-protocol state machine:
///
///   idle               fw BEGIN_REQ  -> request-outstanding   ACCEPTED
///   request-outstanding bw END_REQ   -> awaiting-response     ACCEPTED
///   request-outstanding bw BEGIN_RESP -> response-outstanding ACCEPTED
///   awaiting-response  bw BEGIN_RESP -> response-outstanding  ACCEPTED
///   response-outstanding fw END_RESP -> idle                  COMPLETED
///
/// BEGIN_RESP straight after BEGIN_REQ implies END_REQ. When the callee
/// answers a legal step with COMPLETED the connection returns to idle at
/// once. Anything else is E-PROTO and leaves the state unchanged.
inline NbStepResult nb_step(const ProtocolState& state, Direction dir, Phase phase,
                            std::optional<SyncStatus> callee_answer = std::nullopt) {
    NbStepResult r{std::nullopt, state, {}};
    const bool fw = dir == Direction::Forward;
    if (fw && phase == Phase::BeginReq && state.idle()) {
        r.state = {true, false, Phase::BeginReq};
        r.status = SyncStatus::Accepted;
    } else if (!fw && phase == Phase::EndReq && state.outstanding_request) {
        r.state = {false, false, Phase::EndReq};
        r.status = SyncStatus::Accepted;
    } else if (!fw && phase == Phase::BeginResp && (state.outstanding_request || state.awaiting_response())) {
        r.state = {false, true, Phase::BeginResp};
        r.status = SyncStatus::Accepted;
    } else if (fw && phase == Phase::EndResp && state.outstanding_response) {
        r.state = {false, false, Phase::EndResp};
        r.status = SyncStatus::Completed;
    } else {
        r.error = "E-PROTO: " + std::string(to_string(dir)) + " " + std::string(to_string(phase)) + " illegal in state " +
                  describe(state);
        return r;
    }
    if (callee_answer) {
        r.status = *callee_answer;
        if (*callee_answer == SyncStatus::Completed) r.state = ProtocolState{};
    }
    return r;
}

using PhaseStep = std::pair<Direction, Phase>;

/// True iff folding nb_step over the sequence from idle never fails.
inline bool protocol_legal(std::span<const PhaseStep> seq) {
    ProtocolState state;
    for (const auto& [dir, phase] : seq) {
        auto r = nb_step(state, dir, phase);
        if (!r.ok()) return false;
        state = r.state;
    }
    return true;
}

enum class DmiAccess { Read, Write, ReadWrite };

/// Direct-memory grant. A granted descriptor stays usable while the
/// storage's DMI epoch matches the one recorded at grant time.
struct DmiDescriptor {
    bool granted = false;
    std::uint64_t start_address = 0;
    std::uint64_t end_address = UINT64_MAX;
    DmiAccess access = DmiAccess::ReadWrite;
    SimTime read_latency;
    SimTime write_latency;
    Storage* storage = nullptr;
    std::uint64_t epoch = 0;

    bool valid() const { return granted && storage != nullptr && storage->dmi_epoch == epoch; }
    bool covers(std::uint64_t address) const { return address >= start_address && address <= end_address; }
};

/// The callee side of the four core interfaces. `in_socket` identifies
/// which of the callee's sockets the call arrived on.
class TransportTarget {
public:
    virtual ~TransportTarget() = default;

    /// Executes the transaction to completion; `delay` is the caller's
    /// local-time annotation and grows by the callee's service latency.
    virtual void b_transport(std::size_t in_socket, GenericPayload& p, SimTime& delay) = 0;

    virtual SyncStatus nb_transport_fw(std::size_t in_socket, GenericPayload& p, Phase& phase, SimTime& delay) = 0;

    virtual DmiDescriptor get_direct_mem_ptr(std::size_t in_socket, std::uint64_t address) = 0;

    /// Zero-time access; returns the number of bytes transferred.
    virtual std::size_t transport_dbg(std::size_t in_socket, GenericPayload& p) = 0;
};

/// One end of a binding: a callee and the socket index on it.
struct SocketRef {
    TransportTarget* target = nullptr;
    std::size_t socket = 0;

    bool operator==(const SocketRef&) const = default;
};

inline void b_transport(const SocketRef& to, GenericPayload& p, SimTime& delay) {
    to.target->b_transport(to.socket, p, delay);
}

inline SyncStatus nb_transport_fw(const SocketRef& to, GenericPayload& p, Phase& phase, SimTime& delay) {
    return to.target->nb_transport_fw(to.socket, p, phase, delay);
}

inline DmiDescriptor get_dmi(const SocketRef& to, std::uint64_t address) {
    return to.target->get_direct_mem_ptr(to.socket, address);
}

inline std::size_t transport_dbg(const SocketRef& to, GenericPayload& p) { return to.target->transport_dbg(to.socket, p); }

/// Debug access straight against storage: min(data_length, bytes left in
/// storage from the address) bytes, ignoring enables and streaming.
inline std::size_t debug_access(Storage& storage, GenericPayload& p) {
    if (p.command == Command::Ignore || !storage.contains(p.address)) return 0;
    std::uint64_t available = storage.size() - (p.address - storage.base);
    std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(std::min(p.data_length, p.data.size()), available));
    for (std::size_t i = 0; i < n; ++i) {
        if (p.command == Command::Read)
            p.data[i] = storage.at(p.address + i);
        else
            storage.at(p.address + i) = p.data[i];
    }
    return n;
}

} // namespace tlmforge
