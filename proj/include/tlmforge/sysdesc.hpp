#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "components.hpp"
#include "detail/json_positions.hpp"
#include "error.hpp"
#include "kernel.hpp"
#include "ratio.hpp"
#include "sim_time.hpp"
#include "trace.hpp"

namespace tlmforge {

/// Everything needed to build and run one virtual platform.
struct SystemDescription {
    std::vector<CpuSpec> cpus;
    std::vector<BusSpec> buses;
    std::vector<ModuleSpec> modules;
    std::vector<Instance> instances;
    std::vector<Binding> bindings;
    std::vector<TimingConstraint> constraints;
    SimTime global_quantum;
    std::uint64_t event_limit = kDefaultEventLimit;
    std::optional<std::string> trace_path;

    bool operator==(const SystemDescription&) const = default;

    const CpuSpec* find_cpu(std::string_view name) const { return find_named(cpus, name); }
    const Instance* find_instance(std::string_view name) const { return find_named(instances, name); }
    const ModuleSpec* find_module(std::string_view name) const {
        for (const auto& m : modules)
            if (module_name(m) == name) return &m;
        return nullptr;
    }
    const ModuleSpec* module_of(const Instance& inst) const { return find_module(inst.module); }

private:
    template <typename T>
    static const T* find_named(const std::vector<T>& items, std::string_view name) {
        for (const auto& item : items)
            if (item.name == name) return &item;
        return nullptr;
    }
};

struct ParseResult {
    SystemDescription description;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return diagnostics.empty(); }
};

namespace detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (auto b : bytes) {
        out += digits[b >> 4];
        out += digits[b & 0xF];
    }
    return out;
}

inline std::optional<std::vector<std::uint8_t>> from_hex(std::string_view s) {
    if (s.size() % 2 != 0) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < s.size(); i += 2) {
        int hi = nibble(s[i]), lo = nibble(s[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

inline bool valid_identifier(std::string_view s) {
    return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
        return static_cast<unsigned char>(c) < 0x20 || c == 0x7F;
    });
}

/// Typed field access that records E-MISSING / E-TYPE diagnostics with
/// source positions instead of throwing.
class FieldReader {
public:
    FieldReader(const PositionIndex& index, std::vector<Diagnostic>& out) : index_(index), out_(out) {}

    void report(const std::string& code, const std::string& pointer, const std::string& message) {
        auto pos = index_.find(pointer);
        out_.push_back({code, pointer, message, pos.line, pos.column});
    }

    bool expect_object(const json& v, const std::string& ptr) {
        if (v.is_object()) return true;
        report("E-TYPE", ptr, "expected an object");
        return false;
    }

    void allow_keys(const json& obj, const std::string& ptr, std::initializer_list<std::string_view> keys) {
        for (const auto& [key, _] : obj.items())
            if (std::find(keys.begin(), keys.end(), key) == keys.end())
                report("E-TYPE", ptr + "/" + escape_pointer_token(key), "unknown field '" + key + "'");
    }

    const json* get(const json& obj, const std::string& ptr, const char* key, bool required) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) report("E-MISSING", ptr + "/" + key, std::string("missing required field '") + key + "'");
            return nullptr;
        }
        return &*it;
    }

    const json* array(const json& obj, const std::string& ptr, const char* key, bool required) {
        const json* v = get(obj, ptr, key, required);
        if (v && !v->is_array()) {
            report("E-TYPE", ptr + "/" + key, std::string("'") + key + "' must be an array");
            return nullptr;
        }
        return v;
    }

    std::optional<std::string> identifier(const json& obj, const std::string& ptr, const char* key) {
        const json* v = get(obj, ptr, key, true);
        if (!v) return std::nullopt;
        if (!v->is_string() || !valid_identifier(v->get_ref<const std::string&>())) {
            report("E-TYPE", ptr + "/" + key, std::string("'") + key + "' must be a non-empty name");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    template <typename Parse>
    auto literal(const json& obj, const std::string& ptr, const char* key, bool required, Parse parse,
                 const char* what) -> decltype(parse(std::string_view{})) {
        const json* v = get(obj, ptr, key, required);
        if (!v) return std::nullopt;
        if (v->is_string()) {
            if (auto r = parse(v->get_ref<const std::string&>())) return r;
        }
        report("E-TYPE", ptr + "/" + key, std::string("'") + key + "' must be " + what);
        return std::nullopt;
    }

    std::optional<SimTime> duration(const json& obj, const std::string& ptr, const char* key, bool required) {
        return literal(obj, ptr, key, required, parse_duration, "a duration such as \"10ns\"");
    }

    std::optional<Ratio> frequency(const json& obj, const std::string& ptr, const char* key) {
        auto positive = [](std::string_view s) -> std::optional<Ratio> {
            auto r = parse_frequency(s);
            if (r && r->positive()) return r;
            return std::nullopt;
        };
        return literal(obj, ptr, key, true, positive, "a positive frequency such as \"4GHz\"");
    }

    std::optional<Ratio> bandwidth(const json& obj, const std::string& ptr, const char* key) {
        auto positive = [](std::string_view s) -> std::optional<Ratio> {
            auto r = parse_bandwidth(s);
            if (r && r->positive()) return r;
            return std::nullopt;
        };
        return literal(obj, ptr, key, false, positive, "a positive bandwidth such as \"512B/ns\"");
    }

    /// Unsigned integer given as a JSON number or a "0x..." / decimal string.
    std::optional<std::uint64_t> address(const json& obj, const std::string& ptr, const char* key, bool required) {
        const json* v = get(obj, ptr, key, required);
        if (!v) return std::nullopt;
        if (v->is_number_unsigned()) return v->get<std::uint64_t>();
        if (v->is_string()) {
            const auto& s = v->get_ref<const std::string&>();
            try {
                std::size_t used = 0;
                bool hex = s.starts_with("0x") || s.starts_with("0X");
                if (!s.empty() && s[0] != '-' && s[0] != '+' && s.find(' ') == std::string::npos) {
                    auto value = std::stoull(hex ? s.substr(2) : s, &used, hex ? 16 : 10);
                    if (used == s.size() - (hex ? 2 : 0) && used > 0) return value;
                }
            } catch (const std::exception&) {
            }
        }
        report("E-TYPE", ptr + "/" + key, std::string("'") + key + "' must be an unsigned integer or \"0x...\" string");
        return std::nullopt;
    }

    std::optional<std::uint64_t> count(const json& obj, const std::string& ptr, const char* key, bool required,
                                       std::uint64_t min, std::uint64_t max = UINT64_MAX) {
        const json* v = get(obj, ptr, key, required);
        if (!v) return std::nullopt;
        if (v->is_number_unsigned()) {
            auto n = v->get<std::uint64_t>();
            if (n >= min && n <= max) return n;
        }
        report("E-TYPE", ptr + "/" + key,
               std::string("'") + key + "' must be an integer >= " + std::to_string(min) +
                   (max == UINT64_MAX ? std::string() : " and <= " + std::to_string(max)));
        return std::nullopt;
    }

    std::optional<bool> boolean(const json& obj, const std::string& ptr, const char* key) {
        const json* v = get(obj, ptr, key, false);
        if (!v) return std::nullopt;
        if (v->is_boolean()) return v->get<bool>();
        report("E-TYPE", ptr + "/" + key, std::string("'") + key + "' must be true or false");
        return std::nullopt;
    }

    std::optional<std::vector<std::uint8_t>> hex(const json& obj, const std::string& ptr, const char* key) {
        auto parse = [](std::string_view s) { return from_hex(s); };
        return literal(obj, ptr, key, false, parse, "a hex byte string such as \"deadbeef\"");
    }

private:
    const PositionIndex& index_;
    std::vector<Diagnostic>& out_;
};

inline std::string idx(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

inline std::optional<TransactionTemplate> read_template(FieldReader& r, const json& v, const std::string& ptr) {
    if (!r.expect_object(v, ptr)) return std::nullopt;
    r.allow_keys(v, ptr,
                 {"command", "address", "data", "length", "socket", "repeat", "streaming_width", "byte_enables", "period"});
    TransactionTemplate t;
    bool ok = true;
    auto command = r.literal(
        v, ptr, "command", true, [](std::string_view s) { return command_from_string(s); }, "READ, WRITE or IGNORE");
    if (command) t.command = *command;
    else ok = false;
    if (auto a = r.address(v, ptr, "address", true)) t.address = *a;
    else ok = false;
    auto data = r.hex(v, ptr, "data");
    auto length = r.count(v, ptr, "length", false, 0);
    if (command == Command::Write) {
        if (!data && !length && !v.contains("data") && !v.contains("length")) {
            r.report("E-MISSING", ptr + "/data", "WRITE needs 'data' or 'length'");
            ok = false;
        }
        t.data = data.value_or(std::vector<std::uint8_t>{});
        if (length && *length > t.data.size()) t.data.resize(*length, 0);
        if (length && data && *length < data->size()) {
            r.report("E-TYPE", ptr + "/length", "'length' shorter than 'data'");
            ok = false;
        }
        t.length = t.data.size();
    } else if (command) {
        if (v.contains("data")) {
            r.report("E-TYPE", ptr + "/data", "'data' is only valid for WRITE");
            ok = false;
        }
        if (!length && !v.contains("length")) {
            r.report("E-MISSING", ptr + "/length", "READ/IGNORE needs 'length'");
            ok = false;
        }
        t.length = length.value_or(0);
    }
    t.socket = r.count(v, ptr, "socket", false, 0).value_or(0);
    t.repeat = r.count(v, ptr, "repeat", false, 1).value_or(1);
    if (auto sw = r.count(v, ptr, "streaming_width", false, 1)) t.streaming_width = *sw;
    if (auto be = r.hex(v, ptr, "byte_enables")) {
        if (be->empty()) {
            r.report("E-TYPE", ptr + "/byte_enables", "'byte_enables' must not be empty");
            ok = false;
        }
        t.byte_enables = *be;
    }
    t.period = r.duration(v, ptr, "period", false);
    if (!ok) return std::nullopt;
    return t;
}

inline std::optional<ModuleSpec> read_module(FieldReader& r, const json& v, const std::string& ptr) {
    if (!r.expect_object(v, ptr)) return std::nullopt;
    auto kind = r.literal(
        v, ptr, "kind", true,
        [](std::string_view s) -> std::optional<std::string> {
            if (s == "initiator" || s == "target" || s == "router") return std::string(s);
            return std::nullopt;
        },
        "\"initiator\", \"target\" or \"router\"");
    auto name = r.identifier(v, ptr, "name");
    if (!kind) return std::nullopt;
    if (*kind == "initiator") {
        r.allow_keys(v, ptr, {"kind", "name", "delay", "sockets", "bandwidth", "workload", "dmi"});
        InitiatorSpec s;
        s.name = name.value_or("");
        auto delay = r.duration(v, ptr, "delay", true);
        s.delay = delay.value_or(SimTime{});
        s.socket_count = r.count(v, ptr, "sockets", false, 1).value_or(1);
        s.bandwidth = r.bandwidth(v, ptr, "bandwidth");
        s.use_dmi = r.boolean(v, ptr, "dmi").value_or(false);
        bool ok = name && delay;
        if (const json* wl = r.array(v, ptr, "workload", false)) {
            for (std::size_t i = 0; i < wl->size(); ++i) {
                auto t = read_template(r, (*wl)[i], idx(ptr + "/workload", i));
                if (t) s.workload.push_back(std::move(*t));
                else ok = false;
            }
        }
        if (!ok) return std::nullopt;
        return s;
    }
    if (*kind == "target") {
        r.allow_keys(v, ptr, {"kind", "name", "socket_delays", "bandwidth", "storage", "dmi"});
        TargetSpec s;
        s.name = name.value_or("");
        bool ok = name.has_value();
        if (const json* delays = r.array(v, ptr, "socket_delays", true)) {
            if (delays->empty()) {
                r.report("E-TYPE", ptr + "/socket_delays", "a target needs at least one socket delay");
                ok = false;
            }
            for (std::size_t i = 0; i < delays->size(); ++i) {
                const auto& d = (*delays)[i];
                std::optional<SimTime> t;
                if (d.is_string()) t = parse_duration(d.get_ref<const std::string&>());
                if (!t) {
                    r.report("E-TYPE", idx(ptr + "/socket_delays", i), "socket delay must be a duration");
                    ok = false;
                } else {
                    s.socket_delays.push_back(*t);
                }
            }
        } else {
            ok = false;
        }
        s.bandwidth = r.bandwidth(v, ptr, "bandwidth");
        s.dmi_allowed = r.boolean(v, ptr, "dmi").value_or(false);
        if (const json* st = r.get(v, ptr, "storage", true)) {
            const std::string sp = ptr + "/storage";
            if (r.expect_object(*st, sp)) {
                r.allow_keys(*st, sp, {"base", "size", "fill"});
                s.storage_base = r.address(*st, sp, "base", false).value_or(0);
                auto size = r.count(*st, sp, "size", true, 1);
                s.storage_size = size.value_or(0);
                s.storage_fill = static_cast<std::uint8_t>(r.count(*st, sp, "fill", false, 0, 255).value_or(0));
                ok = ok && size.has_value();
            } else {
                ok = false;
            }
        } else {
            ok = false;
        }
        if (!ok) return std::nullopt;
        return s;
    }
    r.allow_keys(v, ptr, {"kind", "name", "delay", "in_sockets", "out_sockets", "connections", "address_map", "bandwidth"});
    RouterSpec s;
    s.name = name.value_or("");
    auto delay = r.duration(v, ptr, "delay", true);
    s.delay = delay.value_or(SimTime{});
    s.in_socket_count = r.count(v, ptr, "in_sockets", false, 1).value_or(1);
    s.out_socket_count = r.count(v, ptr, "out_sockets", false, 1).value_or(1);
    s.bandwidth = r.bandwidth(v, ptr, "bandwidth");
    bool ok = name && delay;
    if (const json* conns = r.array(v, ptr, "connections", true)) {
        for (std::size_t i = 0; i < conns->size(); ++i) {
            const auto& c = (*conns)[i];
            const std::string cp = idx(ptr + "/connections", i);
            if (!r.expect_object(c, cp)) {
                ok = false;
                continue;
            }
            r.allow_keys(c, cp, {"in", "out"});
            auto in = r.count(c, cp, "in", true, 0);
            std::vector<std::size_t> outs;
            if (const json* o = r.array(c, cp, "out", true)) {
                if (o->empty()) {
                    r.report("E-TYPE", cp + "/out", "a connection needs at least one out-socket");
                    ok = false;
                }
                for (std::size_t k = 0; k < o->size(); ++k) {
                    if ((*o)[k].is_number_unsigned()) {
                        outs.push_back((*o)[k].get<std::size_t>());
                    } else {
                        r.report("E-TYPE", idx(cp + "/out", k), "out-socket must be an unsigned integer");
                        ok = false;
                    }
                }
            } else {
                ok = false;
            }
            if (!in) {
                ok = false;
            } else if (!s.connections.emplace(*in, std::move(outs)).second) {
                r.report("E-TYPE", cp + "/in", "duplicate connection for in-socket " + std::to_string(*in));
                ok = false;
            }
        }
    } else {
        ok = false;
    }
    if (const json* amap = r.array(v, ptr, "address_map", false)) {
        for (std::size_t i = 0; i < amap->size(); ++i) {
            const auto& e = (*amap)[i];
            const std::string ep = idx(ptr + "/address_map", i);
            if (!r.expect_object(e, ep)) {
                ok = false;
                continue;
            }
            r.allow_keys(e, ep, {"out", "base", "limit"});
            auto out = r.count(e, ep, "out", true, 0);
            auto base = r.address(e, ep, "base", true);
            auto limit = r.address(e, ep, "limit", true);
            if (!out || !base || !limit) {
                ok = false;
                continue;
            }
            if (*limit <= *base) {
                r.report("E-TYPE", ep + "/limit", "'limit' must be greater than 'base'");
                ok = false;
                continue;
            }
            if (!s.address_map.emplace(*out, AddressRange{*base, *limit}).second) {
                r.report("E-TYPE", ep + "/out", "duplicate address window for out-socket " + std::to_string(*out));
                ok = false;
            }
        }
    }
    if (!ok) return std::nullopt;
    return s;
}

inline std::optional<SocketEnd> read_socket_end(FieldReader& r, const json& obj, const std::string& ptr, const char* key) {
    const json* v = r.get(obj, ptr, key, true);
    if (!v) return std::nullopt;
    const std::string sp = ptr + "/" + key;
    if (!r.expect_object(*v, sp)) return std::nullopt;
    r.allow_keys(*v, sp, {"instance", "socket"});
    auto inst = r.identifier(*v, sp, "instance");
    auto sock = r.count(*v, sp, "socket", false, 0);
    if (!inst || (v->contains("socket") && !sock)) return std::nullopt;
    return SocketEnd{*inst, sock.value_or(0)};
}

} // namespace detail

/// Parses the JSON description format. Diagnostics carry the JSON pointer
/// and 1-based line/column of the offending value.
inline ParseResult parse_description(std::string_view text) {
    using detail::json;
    ParseResult result;
    json doc = json::object();
    try {
        // A blank document is an empty description, not a syntax error.
        if (text.find_first_not_of(" \t\r\n") != std::string_view::npos) doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        auto pos = detail::position_at(text, e.byte > 0 ? e.byte - 1 : 0);
        result.diagnostics.push_back({"E-SYNTAX", "", e.what(), pos.line, pos.column});
        return result;
    }
    detail::PositionIndex index(text);
    detail::FieldReader r(index, result.diagnostics);
    auto& d = result.description;
    if (!r.expect_object(doc, "")) return result;
    r.allow_keys(doc, "", {"cpus", "buses", "modules", "instances", "bindings", "constraints", "options"});

    auto each = [&](const char* key, bool required, auto&& fn) {
        if (const json* arr = r.array(doc, "", key, required)) {
            for (std::size_t i = 0; i < arr->size(); ++i) {
                const std::string ptr = detail::idx(std::string("/") + key, i);
                if (r.expect_object((*arr)[i], ptr)) fn((*arr)[i], ptr);
            }
        }
    };

    each("cpus", true, [&](const json& v, const std::string& ptr) {
        r.allow_keys(v, ptr, {"name", "frequency"});
        auto name = r.identifier(v, ptr, "name");
        auto freq = r.frequency(v, ptr, "frequency");
        if (name && freq) d.cpus.push_back({*name, *freq});
    });
    each("buses", false, [&](const json& v, const std::string& ptr) {
        r.allow_keys(v, ptr, {"name", "cpus"});
        auto name = r.identifier(v, ptr, "name");
        const json* cpus = r.array(v, ptr, "cpus", true);
        if (!name || !cpus) return;
        BusSpec bus{*name, {}};
        for (std::size_t i = 0; i < cpus->size(); ++i) {
            const auto& c = (*cpus)[i];
            if (!c.is_string() || !detail::valid_identifier(c.get_ref<const std::string&>())) {
                r.report("E-TYPE", detail::idx(ptr + "/cpus", i), "CPU reference must be a name");
                return;
            }
            bus.cpus.push_back(c.get<std::string>());
        }
        if (bus.cpus.size() < 2) {
            r.report("E-TYPE", ptr + "/cpus", "a bus connects at least two CPUs");
            return;
        }
        d.buses.push_back(std::move(bus));
    });
    each("modules", false, [&](const json& v, const std::string& ptr) {
        if (auto m = detail::read_module(r, v, ptr)) d.modules.push_back(std::move(*m));
    });
    each("instances", false, [&](const json& v, const std::string& ptr) {
        r.allow_keys(v, ptr, {"name", "module", "cpu"});
        auto name = r.identifier(v, ptr, "name");
        auto module = r.identifier(v, ptr, "module");
        auto cpu = r.identifier(v, ptr, "cpu");
        if (name && module && cpu) d.instances.push_back({*name, *module, *cpu});
    });
    each("bindings", false, [&](const json& v, const std::string& ptr) {
        r.allow_keys(v, ptr, {"from", "to"});
        auto from = detail::read_socket_end(r, v, ptr, "from");
        auto to = detail::read_socket_end(r, v, ptr, "to");
        if (from && to) d.bindings.push_back({*from, *to});
    });
    each("constraints", false, [&](const json& v, const std::string& ptr) {
        r.allow_keys(v, ptr, {"instance", "max_end"});
        auto inst = r.identifier(v, ptr, "instance");
        auto max_end = r.duration(v, ptr, "max_end", true);
        if (inst && max_end) d.constraints.push_back({*inst, *max_end});
    });
    if (const json* opts = r.get(doc, "", "options", false)) {
        if (r.expect_object(*opts, "/options")) {
            r.allow_keys(*opts, "/options", {"global_quantum", "event_limit", "trace"});
            d.global_quantum = r.duration(*opts, "/options", "global_quantum", false).value_or(SimTime{});
            d.event_limit = r.count(*opts, "/options", "event_limit", false, 1).value_or(kDefaultEventLimit);
            if (const json* t = r.get(*opts, "/options", "trace", false)) {
                if (t->is_string() && !t->get_ref<const std::string&>().empty())
                    d.trace_path = t->get<std::string>();
                else
                    r.report("E-TYPE", "/options/trace", "'trace' must be a non-empty path");
            }
        }
    }
    return result;
}

/// Inverse of parse_description: parse(serialize(d)) == d.
inline std::string serialize_description(const SystemDescription& d) {
    using detail::ordered_json;
    ordered_json doc = ordered_json::object();
    auto& cpus = doc["cpus"] = ordered_json::array();
    for (const auto& c : d.cpus) cpus.push_back({{"name", c.name}, {"frequency", format_frequency(c.frequency_ghz)}});
    auto& buses = doc["buses"] = ordered_json::array();
    for (const auto& b : d.buses) buses.push_back({{"name", b.name}, {"cpus", b.cpus}});
    auto& modules = doc["modules"] = ordered_json::array();
    for (const auto& m : d.modules) {
        ordered_json j = ordered_json::object();
        if (const auto* s = std::get_if<InitiatorSpec>(&m)) {
            j["kind"] = "initiator";
            j["name"] = s->name;
            j["delay"] = to_string(s->delay);
            j["sockets"] = s->socket_count;
            if (s->bandwidth) j["bandwidth"] = format_bandwidth(*s->bandwidth);
            if (s->use_dmi) j["dmi"] = true;
            auto& wl = j["workload"] = ordered_json::array();
            for (const auto& t : s->workload) {
                ordered_json tj = ordered_json::object();
                tj["command"] = std::string(to_string(t.command));
                tj["address"] = t.address;
                if (t.command == Command::Write)
                    tj["data"] = detail::to_hex(t.data);
                else
                    tj["length"] = t.length;
                tj["socket"] = t.socket;
                tj["repeat"] = t.repeat;
                if (t.streaming_width) tj["streaming_width"] = *t.streaming_width;
                if (t.byte_enables) tj["byte_enables"] = detail::to_hex(*t.byte_enables);
                if (t.period) tj["period"] = to_string(*t.period);
                wl.push_back(std::move(tj));
            }
        } else if (const auto* s = std::get_if<TargetSpec>(&m)) {
            j["kind"] = "target";
            j["name"] = s->name;
            auto& delays = j["socket_delays"] = ordered_json::array();
            for (auto t : s->socket_delays) delays.push_back(to_string(t));
            if (s->bandwidth) j["bandwidth"] = format_bandwidth(*s->bandwidth);
            j["storage"] = {{"base", s->storage_base}, {"size", s->storage_size}, {"fill", s->storage_fill}};
            j["dmi"] = s->dmi_allowed;
        } else if (const auto* s = std::get_if<RouterSpec>(&m)) {
            j["kind"] = "router";
            j["name"] = s->name;
            j["delay"] = to_string(s->delay);
            j["in_sockets"] = s->in_socket_count;
            j["out_sockets"] = s->out_socket_count;
            if (s->bandwidth) j["bandwidth"] = format_bandwidth(*s->bandwidth);
            auto& conns = j["connections"] = ordered_json::array();
            for (const auto& [in, outs] : s->connections) conns.push_back({{"in", in}, {"out", outs}});
            if (!s->address_map.empty()) {
                auto& amap = j["address_map"] = ordered_json::array();
                for (const auto& [out, range] : s->address_map)
                    amap.push_back({{"out", out}, {"base", range.base}, {"limit", range.limit}});
            }
        }
        modules.push_back(std::move(j));
    }
    auto& instances = doc["instances"] = ordered_json::array();
    for (const auto& i : d.instances) instances.push_back({{"name", i.name}, {"module", i.module}, {"cpu", i.cpu}});
    auto& bindings = doc["bindings"] = ordered_json::array();
    for (const auto& b : d.bindings)
        bindings.push_back({{"from", {{"instance", b.from.instance}, {"socket", b.from.socket}}},
                            {"to", {{"instance", b.to.instance}, {"socket", b.to.socket}}}});
    auto& constraints = doc["constraints"] = ordered_json::array();
    for (const auto& c : d.constraints)
        constraints.push_back({{"instance", c.instance}, {"max_end", to_string(c.max_end)}});
    auto& opts = doc["options"] = ordered_json::object();
    opts["global_quantum"] = to_string(d.global_quantum);
    opts["event_limit"] = d.event_limit;
    if (d.trace_path) opts["trace"] = *d.trace_path;
    return doc.dump(2) + "\n";
}

/// Cross-reference and topology rules. Codes:
///   E001 unknown CPU                     E005 duplicate identifier
///   E002 socket index out of range       E006 invalid router connection
///   E003 binding across CPUs sharing no bus
///   E004 READ fan-out > 1 without disjoint address decode
///   E007 constraint on unknown instance  E008 in-socket bound twice
///   E009 unknown module or instance reference
/// The result is sorted by code, then location.
inline std::vector<Diagnostic> validate_description(const SystemDescription& d) {
    std::vector<Diagnostic> out;
    auto report = [&](const char* code, std::string location, std::string message) {
        out.push_back({code, std::move(location), std::move(message), 0, 0});
    };

    auto check_unique = [&](const auto& items, const char* section, auto name_of) {
        std::set<std::string> seen;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (!seen.insert(name_of(items[i])).second)
                report("E005", detail::idx(std::string("/") + section, i) + "/name",
                       std::string("duplicate ") + section + " name '" + name_of(items[i]) + "'");
    };
    auto by_name = [](const auto& x) -> const std::string& { return x.name; };
    check_unique(d.cpus, "cpus", by_name);
    check_unique(d.buses, "buses", by_name);
    check_unique(d.modules, "modules", [](const ModuleSpec& m) -> const std::string& { return module_name(m); });
    check_unique(d.instances, "instances", by_name);

    for (std::size_t b = 0; b < d.buses.size(); ++b)
        for (std::size_t c = 0; c < d.buses[b].cpus.size(); ++c)
            if (!d.find_cpu(d.buses[b].cpus[c]))
                report("E001", detail::idx(detail::idx("/buses", b) + "/cpus", c),
                       "bus '" + d.buses[b].name + "' references unknown CPU '" + d.buses[b].cpus[c] + "'");

    for (std::size_t i = 0; i < d.instances.size(); ++i) {
        const auto& inst = d.instances[i];
        if (!d.find_cpu(inst.cpu))
            report("E001", detail::idx("/instances", i) + "/cpu",
                   "instance '" + inst.name + "' assigned to unknown CPU '" + inst.cpu + "'");
        if (!d.find_module(inst.module))
            report("E009", detail::idx("/instances", i) + "/module",
                   "instance '" + inst.name + "' uses unknown module '" + inst.module + "'");
    }

    for (std::size_t m = 0; m < d.modules.size(); ++m) {
        const std::string mp = detail::idx("/modules", m);
        if (const auto* s = std::get_if<InitiatorSpec>(&d.modules[m])) {
            for (std::size_t k = 0; k < s->workload.size(); ++k)
                if (s->workload[k].socket >= s->socket_count)
                    report("E002", detail::idx(mp + "/workload", k) + "/socket",
                           "workload socket " + std::to_string(s->workload[k].socket) + " but '" + s->name + "' has " +
                               std::to_string(s->socket_count) + " socket(s)");
        } else if (const auto* s = std::get_if<RouterSpec>(&d.modules[m])) {
            for (const auto& [in, outs] : s->connections) {
                if (in >= s->in_socket_count)
                    report("E006", mp + "/connections",
                           "router '" + s->name + "' connects nonexistent in-socket " + std::to_string(in));
                if (outs.empty())
                    report("E006", mp + "/connections",
                           "router '" + s->name + "' in-socket " + std::to_string(in) + " has no out-sockets");
                for (auto o : outs)
                    if (o >= s->out_socket_count)
                        report("E006", mp + "/connections",
                               "router '" + s->name + "' connects nonexistent out-socket " + std::to_string(o));
            }
            for (const auto& [o, range] : s->address_map)
                if (o >= s->out_socket_count)
                    report("E006", mp + "/address_map",
                           "router '" + s->name + "' maps nonexistent out-socket " + std::to_string(o));
            for (const auto& [in, outs] : s->connections) {
                for (std::size_t a = 0; a < outs.size(); ++a)
                    for (std::size_t b = a + 1; b < outs.size(); ++b) {
                        auto ra = s->address_map.find(outs[a]);
                        auto rb = s->address_map.find(outs[b]);
                        if (ra != s->address_map.end() && rb != s->address_map.end() && ra->second.overlaps(rb->second))
                            report("E004", mp + "/address_map",
                                   "router '" + s->name + "' in-socket " + std::to_string(in) +
                                       " decodes overlapping windows for out-sockets " + std::to_string(outs[a]) +
                                       " and " + std::to_string(outs[b]));
                    }
            }
        }
    }

    auto module_for = [&](std::string_view instance) -> const ModuleSpec* {
        const auto* inst = d.find_instance(instance);
        return inst ? d.module_of(*inst) : nullptr;
    };

    std::map<std::pair<std::string, std::size_t>, std::size_t> bound_in;
    for (std::size_t b = 0; b < d.bindings.size(); ++b) {
        const auto& bind = d.bindings[b];
        const std::string bp = detail::idx("/bindings", b);
        const auto* from_inst = d.find_instance(bind.from.instance);
        const auto* to_inst = d.find_instance(bind.to.instance);
        if (!from_inst)
            report("E009", bp + "/from/instance", "binding from unknown instance '" + bind.from.instance + "'");
        if (!to_inst) report("E009", bp + "/to/instance", "binding to unknown instance '" + bind.to.instance + "'");
        if (const auto* m = from_inst ? d.module_of(*from_inst) : nullptr; m && bind.from.socket >= out_socket_count(*m))
            report("E002", bp + "/from/socket",
                   "'" + bind.from.instance + "' has no out-socket " + std::to_string(bind.from.socket));
        if (const auto* m = to_inst ? d.module_of(*to_inst) : nullptr; m && bind.to.socket >= in_socket_count(*m))
            report("E002", bp + "/to/socket", "'" + bind.to.instance + "' has no in-socket " + std::to_string(bind.to.socket));
        if (!bound_in.emplace(std::pair{bind.to.instance, bind.to.socket}, b).second)
            report("E008", bp + "/to",
                   "in-socket " + std::to_string(bind.to.socket) + " of '" + bind.to.instance + "' is already bound");
        if (from_inst && to_inst && from_inst->cpu != to_inst->cpu && d.find_cpu(from_inst->cpu) &&
            d.find_cpu(to_inst->cpu)) {
            bool shared = std::any_of(d.buses.begin(), d.buses.end(), [&](const BusSpec& bus) {
                auto has = [&](const std::string& c) { return std::find(bus.cpus.begin(), bus.cpus.end(), c) != bus.cpus.end(); };
                return has(from_inst->cpu) && has(to_inst->cpu);
            });
            if (!shared)
                report("E003", bp,
                       "'" + from_inst->name + "' on " + from_inst->cpu + " and '" + to_inst->name + "' on " +
                           to_inst->cpu + " share no bus");
        }
    }

    // READ fan-out: follow every READ template through routers.
    std::map<std::pair<std::string, std::size_t>, std::vector<SocketEnd>> fanout;
    for (const auto& bind : d.bindings) fanout[{bind.from.instance, bind.from.socket}].push_back(bind.to);
    auto instance_ptr = [&](std::string_view name) {
        for (std::size_t i = 0; i < d.instances.size(); ++i)
            if (d.instances[i].name == name) return detail::idx("/instances", i);
        return std::string("/instances");
    };
    std::set<std::string> e004_at;
    auto flag_fanout = [&](const std::string& instance, const std::string& why) {
        auto loc = instance_ptr(instance);
        if (e004_at.insert(loc).second) report("E004", loc, "READ fans out at '" + instance + "': " + why);
    };
    for (const auto& inst : d.instances) {
        const auto* spec = std::get_if<InitiatorSpec>(module_for(inst.name));
        if (!spec) continue;
        for (const auto& t : spec->workload) {
            if (t.command != Command::Read) continue;
            std::set<std::pair<std::string, std::size_t>> visited;
            GenericPayload probe;
            probe.address = t.address;
            auto walk = [&](auto&& self, const std::string& from, std::size_t out_socket) -> void {
                auto it = fanout.find({from, out_socket});
                if (it == fanout.end()) return;
                if (it->second.size() > 1)
                    flag_fanout(from, "out-socket " + std::to_string(out_socket) + " is bound to " +
                                          std::to_string(it->second.size()) + " in-sockets");
                for (const auto& dest : it->second) {
                    if (!visited.insert({dest.instance, dest.socket}).second) continue;
                    const auto* router = std::get_if<RouterSpec>(module_for(dest.instance));
                    if (!router) continue;
                    auto outs = route(*router, dest.socket, probe);
                    if (!outs) continue;
                    if (outs->size() > 1)
                        flag_fanout(dest.instance, "in-socket " + std::to_string(dest.socket) + " broadcasts to " +
                                                       std::to_string(outs->size()) + " out-sockets");
                    for (auto o : *outs) self(self, dest.instance, o);
                }
            };
            walk(walk, inst.name, t.socket);
        }
    }

    for (std::size_t c = 0; c < d.constraints.size(); ++c)
        if (!d.find_instance(d.constraints[c].instance))
            report("E007", detail::idx("/constraints", c) + "/instance",
                   "constraint on unknown instance '" + d.constraints[c].instance + "'");

    std::sort(out.begin(), out.end(), [](const Diagnostic& a, const Diagnostic& b) {
        return std::tie(a.code, a.location, a.message) < std::tie(b.code, b.location, b.message);
    });
    return out;
}

/// Attaches source positions from the original text to diagnostics whose
/// location is a JSON pointer.
inline void locate(std::vector<Diagnostic>& diags, std::string_view text) {
    detail::PositionIndex index;
    try {
        index = detail::PositionIndex(text);
    } catch (const std::exception&) {
        return;
    }
    for (auto& d : diags) {
        if (d.line != 0) continue;
        auto pos = index.find(d.location);
        d.line = pos.line;
        d.column = pos.column;
    }
}

inline std::string format_diagnostic(const Diagnostic& d, std::string_view file = {}) {
    std::string out;
    if (!file.empty()) out += std::string(file) + ":";
    if (d.line != 0) out += std::to_string(d.line) + ":" + std::to_string(d.column) + ":";
    if (!out.empty()) out += " ";
    out += d.code + " " + d.message;
    if (!d.location.empty()) out += " (at " + d.location + ")";
    return out;
}

} // namespace tlmforge
