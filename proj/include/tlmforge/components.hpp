#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"
#include "kernel.hpp"
#include "memory.hpp"
#include "payload.hpp"
#include "ratio.hpp"
#include "sim_time.hpp"
#include "trace.hpp"
#include "transport.hpp"

namespace tlmforge {

// ---------------------------------------------------------------------------
// Declarative specs
// ---------------------------------------------------------------------------

struct CpuSpec {
    std::string name;
    Ratio frequency_ghz{1};

    bool operator==(const CpuSpec&) const = default;
};

/// A virtual bus: instances on any two of these CPUs may be bound together.
struct BusSpec {
    std::string name;
    std::vector<std::string> cpus;

    bool operator==(const BusSpec&) const = default;
};

/// Half-open address window [base, limit).
struct AddressRange {
    std::uint64_t base = 0;
    std::uint64_t limit = 0;

    bool contains(std::uint64_t a) const { return a >= base && a < limit; }
    bool overlaps(const AddressRange& o) const { return base < o.limit && o.base < limit; }
    bool operator==(const AddressRange&) const = default;
};

/// One workload entry of an initiator. WRITE carries `data`; READ and
/// IGNORE carry only `length`.
struct TransactionTemplate {
    Command command = Command::Write;
    std::uint64_t address = 0;
    std::vector<std::uint8_t> data;
    std::size_t length = 0;
    std::size_t socket = 0;
    std::size_t repeat = 1;
    std::optional<std::size_t> streaming_width;
    std::optional<std::vector<std::uint8_t>> byte_enables;
    /// Minimum spacing between consecutive activation starts; absent means
    /// back-to-back.
    std::optional<SimTime> period;

    bool operator==(const TransactionTemplate&) const = default;
};

struct InitiatorSpec {
    std::string name;
    SimTime delay;
    std::size_t socket_count = 1;
    std::optional<Ratio> bandwidth;
    std::vector<TransactionTemplate> workload;
    /// Use direct memory access whenever the bound target grants it.
    bool use_dmi = false;

    bool operator==(const InitiatorSpec&) const = default;
};

struct TargetSpec {
    std::string name;
    std::vector<SimTime> socket_delays;
    std::optional<Ratio> bandwidth;
    std::uint64_t storage_base = 0;
    std::uint64_t storage_size = 0;
    std::uint8_t storage_fill = 0;
    bool dmi_allowed = false;

    bool operator==(const TargetSpec&) const = default;
};

struct RouterSpec {
    std::string name;
    SimTime delay;
    std::size_t in_socket_count = 1;
    std::size_t out_socket_count = 1;
    std::map<std::size_t, std::vector<std::size_t>> connections;
    /// Empty means no address decoding: every connected out receives a copy.
    std::map<std::size_t, AddressRange> address_map;
    std::optional<Ratio> bandwidth;

    bool operator==(const RouterSpec&) const = default;
};

using ModuleSpec = std::variant<InitiatorSpec, TargetSpec, RouterSpec>;

inline const std::string& module_name(const ModuleSpec& m) {
    return std::visit([](const auto& s) -> const std::string& { return s.name; }, m);
}

inline std::size_t out_socket_count(const ModuleSpec& m) {
    if (const auto* i = std::get_if<InitiatorSpec>(&m)) return i->socket_count;
    if (const auto* r = std::get_if<RouterSpec>(&m)) return r->out_socket_count;
    return 0;
}

inline std::size_t in_socket_count(const ModuleSpec& m) {
    if (const auto* t = std::get_if<TargetSpec>(&m)) return t->socket_delays.size();
    if (const auto* r = std::get_if<RouterSpec>(&m)) return r->in_socket_count;
    return 0;
}

struct Instance {
    std::string name;
    std::string module;
    std::string cpu;

    bool operator==(const Instance&) const = default;
};

struct SocketEnd {
    std::string instance;
    std::size_t socket = 0;

    bool operator==(const SocketEnd&) const = default;
};

/// Out-socket `from` to in-socket `to`. One out-socket may appear in many
/// bindings; an in-socket in at most one.
struct Binding {
    SocketEnd from;
    SocketEnd to;

    bool operator==(const Binding&) const = default;
};

// ---------------------------------------------------------------------------
// Timing rules
// ---------------------------------------------------------------------------

/// Declared delays are cycles at 1 GHz: effective = nominal / f, rounded
/// to the nearest picosecond with ties away from zero.
inline SimTime effective_delay(SimTime nominal, const Ratio& frequency_ghz) {
    if (!frequency_ghz.positive()) throw Error("E-FREQUENCY", "frequency must be positive");
    detail::u128 n = static_cast<detail::u128>(nominal.ps()) * frequency_ghz.den();
    detail::u128 q = (2 * n + frequency_ghz.num()) / (2 * static_cast<detail::u128>(frequency_ghz.num()));
    if (!detail::fits_u64(q)) throw Error("E-TIME-OVERFLOW", "scaled delay out of range");
    return SimTime(static_cast<std::uint64_t>(q));
}

/// Serialization latency of `bytes` at `bandwidth` bytes/ns, rounded up to
/// whole picoseconds. No bandwidth means unlimited.
inline SimTime transfer_time(std::size_t bytes, const std::optional<Ratio>& bandwidth) {
    if (!bandwidth || bytes == 0) return SimTime{};
    if (!bandwidth->positive()) throw Error("E-BANDWIDTH", "bandwidth must be positive");
    detail::u128 n = static_cast<detail::u128>(bytes) * 1000 * bandwidth->den();
    detail::u128 q = (n + bandwidth->num() - 1) / bandwidth->num();
    if (!detail::fits_u64(q)) throw Error("E-TIME-OVERFLOW", "transfer time out of range");
    return SimTime(static_cast<std::uint64_t>(q));
}

/// Out-sockets that receive a payload arriving on `in_socket`. With an
/// address map this is the single connected out whose window holds the
/// address; nullopt when nothing matches (E-NO-ROUTE) or the in-socket has
/// no connection.
inline std::optional<std::vector<std::size_t>> route(const RouterSpec& r, std::size_t in_socket, const GenericPayload& p) {
    auto it = r.connections.find(in_socket);
    if (it == r.connections.end()) return std::nullopt;
    if (r.address_map.empty()) return it->second;
    for (auto out : it->second) {
        auto range = r.address_map.find(out);
        if (range != r.address_map.end() && range->second.contains(p.address)) return std::vector<std::size_t>{out};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Runtime models
// ---------------------------------------------------------------------------

namespace detail {

/// Sends an independent copy to every destination with the same starting
/// annotation. `delay` becomes the latest completion; the merged status is
/// OK iff all are OK, else the first failure in destination order. READ
/// data is copied back only from a sole destination.
inline ResponseStatus fan_out(const std::vector<SocketRef>& dests, GenericPayload& p, SimTime& delay) {
    if (dests.empty()) return ResponseStatus::GenericError;
    if (dests.size() == 1) {
        b_transport(dests.front(), p, delay);
        return p.response_status;
    }
    SimTime latest = delay;
    ResponseStatus merged = ResponseStatus::Ok;
    for (const auto& d : dests) {
        GenericPayload copy = deep_copy_payload(p);
        SimTime t = delay;
        b_transport(d, copy, t);
        latest = std::max(latest, t);
        if (merged == ResponseStatus::Ok && copy.response_status != ResponseStatus::Ok) merged = copy.response_status;
    }
    delay = latest;
    p.dmi_allowed = false;
    p.response_status = merged;
    return merged;
}

} // namespace detail

class TargetModel final : public TransportTarget {
public:
    TargetModel(std::string name, TargetSpec spec, Ratio frequency_ghz, const Scheduler& scheduler, TraceSink& trace)
        : name_(std::move(name)), spec_(std::move(spec)), frequency_(frequency_ghz), scheduler_(scheduler),
          trace_(trace), storage_(spec_.storage_base, spec_.storage_size, spec_.storage_fill),
          protocol_(spec_.socket_delays.size()) {}

    const std::string& name() const { return name_; }
    const TargetSpec& spec() const { return spec_; }
    Storage& storage() { return storage_; }
    const Storage& storage() const { return storage_; }
    const ProtocolState& protocol_state(std::size_t in_socket) const { return protocol_.at(in_socket); }

    /// Scaled socket delay plus the transfer time of `bytes`.
    SimTime service_latency(std::size_t in_socket, std::size_t bytes) const {
        return effective_delay(socket_delay(in_socket), frequency_) + transfer_time(bytes, spec_.bandwidth);
    }

    void b_transport(std::size_t in_socket, GenericPayload& p, SimTime& delay) override {
        serve(in_socket, p, delay);
    }

    /// Answers BEGIN_REQ by executing at once and returning BEGIN_RESP on the
    /// return path (UPDATED); END_RESP then completes the transaction.
    SyncStatus nb_transport_fw(std::size_t in_socket, GenericPayload& p, Phase& phase, SimTime& delay) override {
        auto& state = protocol_.at(in_socket);
        auto step = nb_step(state, Direction::Forward, phase);
        if (!step.ok()) throw Error("E-PROTO", name_ + ": " + step.error);
        state = step.state;
        if (phase == Phase::EndResp) return SyncStatus::Completed;
        serve(in_socket, p, delay);
        state = nb_step(state, Direction::Backward, Phase::BeginResp).state;
        phase = Phase::BeginResp;
        return SyncStatus::Updated;
    }

    /// Grants the whole storage range when DMI is enabled and the address
    /// lies inside it. Latency per beat is the scaled socket-0 delay.
    DmiDescriptor get_direct_mem_ptr(std::size_t /*in_socket*/, std::uint64_t address) override {
        DmiDescriptor d;
        d.start_address = storage_.base;
        d.end_address = storage_.last();
        if (!spec_.dmi_allowed || !storage_.contains(address)) return d;
        d.granted = true;
        d.access = DmiAccess::ReadWrite;
        d.read_latency = d.write_latency = effective_delay(socket_delay(0), frequency_);
        d.storage = &storage_;
        d.epoch = storage_.dmi_epoch;
        return d;
    }

    std::size_t transport_dbg(std::size_t /*in_socket*/, GenericPayload& p) override { return debug_access(storage_, p); }

private:
    SimTime socket_delay(std::size_t in_socket) const {
        if (in_socket >= spec_.socket_delays.size())
            throw Error("E-SOCKET", name_ + ": no in-socket " + std::to_string(in_socket));
        return spec_.socket_delays[in_socket];
    }

    void serve(std::size_t in_socket, GenericPayload& p, SimTime& delay) {
        const SimTime start = scheduler_.now() + delay;
        const SimTime latency = service_latency(in_socket, p.data_length);
        delay += latency;
        p.response_status = apply_access(storage_, p);
        p.dmi_allowed = spec_.dmi_allowed;
        trace_.record(name_, start, start + latency, txn_id_of(p), p.response_status);
    }

    std::string name_;
    TargetSpec spec_;
    Ratio frequency_;
    const Scheduler& scheduler_;
    TraceSink& trace_;
    Storage storage_;
    std::vector<ProtocolState> protocol_;
};

class RouterModel final : public TransportTarget {
public:
    RouterModel(std::string name, RouterSpec spec, Ratio frequency_ghz, const Scheduler& scheduler, TraceSink& trace)
        : name_(std::move(name)), spec_(std::move(spec)), frequency_(frequency_ghz), scheduler_(scheduler),
          trace_(trace), outs_(spec_.out_socket_count) {}

    const std::string& name() const { return name_; }
    const RouterSpec& spec() const { return spec_; }

    void bind(std::size_t out_socket, SocketRef dest) { outs_.at(out_socket).push_back(dest); }
    const std::vector<SocketRef>& bound(std::size_t out_socket) const { return outs_.at(out_socket); }

    SimTime own_latency(std::size_t bytes) const {
        return effective_delay(spec_.delay, frequency_) + transfer_time(bytes, spec_.bandwidth);
    }

    /// Destinations in ascending out-socket order, then binding order.
    std::optional<std::vector<SocketRef>> destinations(std::size_t in_socket, const GenericPayload& p) const {
        auto outs = route(spec_, in_socket, p);
        if (!outs) return std::nullopt;
        std::sort(outs->begin(), outs->end());
        std::vector<SocketRef> dests;
        for (auto out : *outs)
            for (const auto& d : outs_.at(out)) dests.push_back(d);
        return dests;
    }

    void b_transport(std::size_t in_socket, GenericPayload& p, SimTime& delay) override {
        const SimTime start = scheduler_.now() + delay;
        const SimTime latency = own_latency(p.data_length);
        delay += latency;
        auto dests = destinations(in_socket, p);
        if (!dests)
            p.response_status = ResponseStatus::AddressError;
        else
            detail::fan_out(*dests, p, delay);
        trace_.record(name_, start, start + latency, txn_id_of(p), p.response_status);
    }

    /// Pass-through for single-destination routes; the router's latency is
    /// added on the request. Broadcast is not supported on this path and
    /// completes early with GENERIC_ERROR.
    SyncStatus nb_transport_fw(std::size_t in_socket, GenericPayload& p, Phase& phase, SimTime& delay) override {
        auto dests = destinations(in_socket, p);
        if (!dests || dests->size() != 1) {
            p.response_status = dests ? ResponseStatus::GenericError : ResponseStatus::AddressError;
            return SyncStatus::Completed;
        }
        if (phase == Phase::BeginReq) {
            const SimTime start = scheduler_.now() + delay;
            const SimTime latency = own_latency(p.data_length);
            delay += latency;
            trace_.record(name_, start, start + latency, txn_id_of(p), ResponseStatus::Ok);
        }
        return nb_transport_fw_to(dests->front(), p, phase, delay);
    }

    /// Forwards to the sole destination and narrows the grant to this
    /// route's address window; the router's scaled delay is added to the
    /// access latencies.
    DmiDescriptor get_direct_mem_ptr(std::size_t in_socket, std::uint64_t address) override {
        GenericPayload probe;
        probe.address = address;
        auto dests = destinations(in_socket, probe);
        if (!dests || dests->size() != 1) return DmiDescriptor{};
        auto d = get_dmi(dests->front(), address);
        if (!spec_.address_map.empty()) {
            auto outs = route(spec_, in_socket, probe);
            const auto& window = spec_.address_map.at(outs->front());
            d.start_address = std::max(d.start_address, window.base);
            d.end_address = std::min(d.end_address, window.limit - 1);
        }
        if (d.granted) {
            auto own = effective_delay(spec_.delay, frequency_);
            d.read_latency += own;
            d.write_latency += own;
        }
        return d;
    }

    /// READ goes to the first destination; WRITE to all, returning the
    /// smallest count.
    std::size_t transport_dbg(std::size_t in_socket, GenericPayload& p) override {
        auto dests = destinations(in_socket, p);
        if (!dests || dests->empty()) return 0;
        if (p.command != Command::Write) return tlmforge::transport_dbg(dests->front(), p);
        std::size_t n = SIZE_MAX;
        for (const auto& d : *dests) n = std::min(n, tlmforge::transport_dbg(d, p));
        return n;
    }

private:
    static SyncStatus nb_transport_fw_to(const SocketRef& to, GenericPayload& p, Phase& phase, SimTime& delay) {
        return tlmforge::nb_transport_fw(to, p, phase, delay);
    }

    std::string name_;
    RouterSpec spec_;
    Ratio frequency_;
    const Scheduler& scheduler_;
    TraceSink& trace_;
    std::vector<std::vector<SocketRef>> outs_;
};

inline GenericPayload build_payload(const TransactionTemplate& t) {
    GenericPayload p;
    p.command = t.command;
    p.address = t.address;
    p.data_length = t.command == Command::Write ? std::max(t.length, t.data.size()) : t.length;
    p.data = t.command == Command::Write ? t.data : std::vector<std::uint8_t>{};
    p.data.resize(p.data_length, 0);
    p.streaming_width = t.streaming_width.value_or(std::max<std::size_t>(p.data_length, 1));
    if (t.byte_enables) {
        p.byte_enables = t.byte_enables;
        p.byte_enable_length = t.byte_enables->size();
    }
    return p;
}

class InitiatorModel {
public:
    InitiatorModel(std::string name, InitiatorSpec spec, Ratio frequency_ghz, Scheduler& scheduler, TraceSink& trace,
                   std::uint64_t& txn_counter)
        : name_(std::move(name)), spec_(std::move(spec)), frequency_(frequency_ghz), scheduler_(scheduler),
          trace_(trace), txn_counter_(txn_counter), outs_(spec_.socket_count), dmi_(spec_.socket_count) {}

    const std::string& name() const { return name_; }
    const InitiatorSpec& spec() const { return spec_; }

    void bind(std::size_t out_socket, SocketRef dest) { outs_.at(out_socket).push_back(dest); }
    const std::vector<SocketRef>& bound(std::size_t out_socket) const { return outs_.at(out_socket); }

    /// Compute time charged before a transaction of `bytes` is sent.
    SimTime issue_latency(std::size_t bytes) const {
        return effective_delay(spec_.delay, frequency_) + transfer_time(bytes, spec_.bandwidth);
    }

    /// Largest local offset held by this initiator just before a sync point.
    SimTime max_local_offset() const { return max_offset_; }
    std::size_t dmi_accesses() const { return dmi_accesses_; }
    const std::vector<std::vector<std::uint8_t>>& read_results() const { return reads_; }

    /// Plays the workload. Each activation starts when the previous one
    /// completes (or one period after the previous start, if later),
    /// charges the compute delay, then issues the transaction.
    Activity run(SimTime global_quantum) {
        QuantumKeeper qk(global_quantum);
        std::optional<SimTime> prev_start;
        for (const auto& tmpl : spec_.workload) {
            for (std::size_t k = 0; k < tmpl.repeat; ++k) {
                SimTime start = qk.current_time(scheduler_);
                if (tmpl.period && prev_start) {
                    SimTime due = *prev_start + *tmpl.period;
                    if (due > start) {
                        qk.advance(due - start);
                        start = due;
                    }
                }
                prev_start = start;

                GenericPayload p = build_payload(tmpl);
                const auto txn = ++txn_counter_;
                p.set_extension(std::string(kTxnIdExtension), std::to_string(txn));
                qk.advance(issue_latency(p.data_length));

                SimTime t = qk.local_offset();
                const auto status = issue(tmpl.socket, p, t);
                qk.advance(t - qk.local_offset());
                max_offset_ = std::max(max_offset_, qk.local_offset());

                trace_.record(name_, start, qk.current_time(scheduler_), txn, status);
                if (p.command == Command::Read) reads_.push_back(p.data);
                if (qk.need_sync()) co_await qk.sync(scheduler_);
            }
        }
        co_await qk.sync(scheduler_);
    }

private:
    ResponseStatus issue(std::size_t socket, GenericPayload& p, SimTime& t) {
        const auto& dests = outs_.at(socket);
        if (spec_.use_dmi && dests.size() == 1 && p.command != Command::Ignore && validate_payload(p).empty()) {
            auto& grant = dmi_[socket];
            const auto last = p.address + (p.streaming_width - 1);
            auto usable = [&] { return grant.valid() && grant.covers(p.address) && grant.covers(last) && last >= p.address; };
            if (!usable()) grant = get_dmi(dests.front(), p.address);
            if (usable()) {
                ++dmi_accesses_;
                p.response_status = apply_access(*grant.storage, p);
                const SimTime per_beat = p.command == Command::Read ? grant.read_latency : grant.write_latency;
                t += per_beat * p.data_length;
                return p.response_status;
            }
        }
        return detail::fan_out(dests, p, t);
    }

    std::string name_;
    InitiatorSpec spec_;
    Ratio frequency_;
    Scheduler& scheduler_;
    TraceSink& trace_;
    std::uint64_t& txn_counter_;
    std::vector<std::vector<SocketRef>> outs_;
    std::vector<DmiDescriptor> dmi_;
    SimTime max_offset_;
    std::size_t dmi_accesses_ = 0;
    std::vector<std::vector<std::uint8_t>> reads_;
};

/// Drives one transaction over the non-blocking interface: BEGIN_REQ, then
/// END_RESP once the annotated response time has elapsed. Every phase
/// exchanged is appended to `phases`.
inline Activity nb_transaction(Scheduler& scheduler, SocketRef to, GenericPayload& p, std::vector<PhaseStep>& phases) {
    Phase phase = Phase::BeginReq;
    SimTime t;
    phases.emplace_back(Direction::Forward, phase);
    auto status = nb_transport_fw(to, p, phase, t);
    if (status == SyncStatus::Completed) {
        co_await scheduler.wait(t);
        co_return;
    }
    if (status == SyncStatus::Updated && phase == Phase::BeginResp) {
        phases.emplace_back(Direction::Backward, phase);
        co_await scheduler.wait(t);
        phase = Phase::EndResp;
        t = SimTime{};
        phases.emplace_back(Direction::Forward, phase);
        nb_transport_fw(to, p, phase, t);
        co_return;
    }
    throw Error("E-PROTO", "unexpected " + std::string(to_string(status)) + " answer to BEGIN_REQ");
}

} // namespace tlmforge
