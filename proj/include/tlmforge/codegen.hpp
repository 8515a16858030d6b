#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "components.hpp"
#include "error.hpp"
#include "sysdesc.hpp"

namespace tlmforge {

struct SourceFile {
    std::string name;
    std::string text;

    bool operator==(const SourceFile&) const = default;
};

using SourceBundle = std::vector<SourceFile>;

/// Maps a name onto [A-Za-z0-9_] with no leading digit: ASCII punctuation
/// becomes '_', non-ASCII bytes are dropped. Throws E-NAME-UNSANITIZABLE
/// when nothing but underscores would remain.
inline std::string sanitize_identifier(std::string_view name) {
    std::string out;
    for (char ch : name) {
        auto c = static_cast<unsigned char>(ch);
        if (c >= 0x80) continue;
        out += (std::isalnum(c) != 0) ? ch : '_';
    }
    if (out.find_first_not_of('_') == std::string::npos)
        throw Error("E-NAME-UNSANITIZABLE", "name '" + std::string(name) + "' has no usable identifier characters");
    if (out[0] >= '0' && out[0] <= '9') out.insert(out.begin(), '_');
    return out;
}

namespace detail {

inline bool reserved_identifier(std::string_view id) {
    static const std::set<std::string_view> words = {
        "alignas", "alignof", "and", "asm", "auto", "bool", "break", "case", "catch", "char", "class", "const",
        "constexpr", "continue", "default", "delete", "do", "double", "else", "enum", "explicit", "export", "extern",
        "false", "float", "for", "friend", "goto", "if", "inline", "int", "long", "mutable", "namespace", "new",
        "noexcept", "not", "nullptr", "operator", "or", "private", "protected", "public", "register", "return",
        "short", "signed", "sizeof", "static", "struct", "switch", "template", "this", "throw", "true", "try",
        "typedef", "typename", "union", "unsigned", "using", "virtual", "void", "volatile", "while", "xor",
        "sc_main", "sc_core", "sc_dt", "tlm", "tlm_utils", "std", "main", "quantum"};
    return words.contains(id);
}

/// Hands out unique identifiers; a taken name gets "_2", "_3", ... appended.
class IdentifierTable {
public:
    std::string claim(std::string_view name) {
        std::string base = sanitize_identifier(name);
        if (reserved_identifier(base)) base += '_';
        std::string id = base;
        for (int n = 2; taken_.contains(id); ++n) id = base + "_" + std::to_string(n);
        taken_.insert(id);
        return id;
    }

private:
    std::set<std::string> taken_;
};

inline std::string replace_all(std::string text, const std::map<std::string, std::string>& vars) {
    for (const auto& [key, value] : vars) {
        const std::string token = "{{" + key + "}}";
        for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size()))
            text.replace(pos, token.size(), value);
    }
    return text;
}

inline std::string c_string(std::string_view s) {
    std::string out = "\"";
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        if (ch == '"' || ch == '\\') {
            out += '\\';
            out += ch;
        } else if (c < 0x20 || c == 0x7F) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\%03o", c);
            out += buf;
        } else {
            out += ch;
        }
    }
    return out + '"';
}

inline std::string hex_u64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%llxULL", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string byte_list(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "0x%02x", bytes[i]);
        if (i) out += ", ";
        out += buf;
    }
    return out;
}

inline std::string ps_time(SimTime t) { return "sc_core::sc_time(" + std::to_string(t.ps()) + ", sc_core::SC_PS)"; }

inline std::string guard_for(const std::string& cls) {
    std::string g = "TLMFORGE_";
    for (char c : cls) g += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return g + "_H";
}

inline std::string transfer_function(const std::optional<Ratio>& bw) {
    if (!bw)
        return "    static sc_core::sc_time transfer(unsigned) { return sc_core::SC_ZERO_TIME; }\n";
    return "    // " + format_bandwidth(*bw) + ", rounded up to whole ps\n"
           "    static sc_core::sc_time transfer(unsigned len) {\n"
           "        const unsigned long long n = len * 1000ULL * " + std::to_string(bw->den()) + "ULL;\n"
           "        return sc_core::sc_time(double((n + " + std::to_string(bw->num() - 1) + "ULL) / " +
           std::to_string(bw->num()) + "ULL), sc_core::SC_PS);\n"
           "    }\n";
}

inline constexpr std::string_view kFanOutHelper = R"(#ifndef TLMFORGE_FAN_OUT_DEFINED
#define TLMFORGE_FAN_OUT_DEFINED
// One independent copy per destination, all starting from the same
// annotation; completes at the latest destination. Status is OK iff every
// copy is OK, else the first failure in destination order.
inline void tlmforge_fan_out(const std::vector<tlm::tlm_fw_transport_if<>*>& dests,
                             tlm::tlm_generic_payload& trans, sc_core::sc_time& t) {
    if (dests.size() == 1) {
        dests[0]->b_transport(trans, t);
        return;
    }
    sc_core::sc_time latest = t;
    tlm::tlm_response_status merged = tlm::TLM_OK_RESPONSE;
    for (tlm::tlm_fw_transport_if<>* dest : dests) {
        std::vector<unsigned char> data(trans.get_data_ptr(), trans.get_data_ptr() + trans.get_data_length());
        tlm::tlm_generic_payload copy;
        copy.set_command(trans.get_command());
        copy.set_address(trans.get_address());
        copy.set_data_ptr(data.data());
        copy.set_data_length(trans.get_data_length());
        copy.set_streaming_width(trans.get_streaming_width());
        copy.set_byte_enable_ptr(trans.get_byte_enable_ptr());
        copy.set_byte_enable_length(trans.get_byte_enable_length());
        copy.set_response_status(tlm::TLM_INCOMPLETE_RESPONSE);
        sc_core::sc_time ti = t;
        dest->b_transport(copy, ti);
        if (ti > latest) latest = ti;
        if (merged == tlm::TLM_OK_RESPONSE && copy.get_response_status() != tlm::TLM_OK_RESPONSE)
            merged = copy.get_response_status();
    }
    t = latest;
    trans.set_dmi_allowed(false);
    trans.set_response_status(merged);
}
#endif
)";

inline constexpr std::string_view kInitiatorTemplate = R"(// Generated by tlmforge from initiator module {{SPEC}}.
#ifndef {{GUARD}}
#define {{GUARD}}

#include <vector>

#include <systemc>
#include <tlm>
#include <tlm_utils/multi_passthrough_initiator_socket.h>
#include <tlm_utils/tlm_quantumkeeper.h>

{{FAN_OUT}}
struct {{CLASS}} : sc_core::sc_module {
{{SOCKETS}}    sc_core::sc_time delay;

    SC_HAS_PROCESS({{CLASS}});
    {{CLASS}}(sc_core::sc_module_name name, sc_core::sc_time delay_)
        : sc_core::sc_module(name),{{SOCKET_INITS}} delay(delay_) {
        SC_THREAD(run);
    }

    void run() {
        tlm_utils::tlm_quantumkeeper qk;
        qk.reset();
        sc_core::sc_time prev_start;
        bool has_prev = false;
{{WORKLOAD}}        qk.sync();
        (void)prev_start;
        (void)has_prev;
    }

private:
    template <typename Socket>
    static std::vector<tlm::tlm_fw_transport_if<>*> bound(Socket& socket) {
        std::vector<tlm::tlm_fw_transport_if<>*> dests;
        for (unsigned i = 0; i < socket.size(); ++i) dests.push_back(socket[i]);
        return dests;
    }
};

#endif
)";

inline constexpr std::string_view kRouterTemplate = R"(// Generated by tlmforge from router module {{SPEC}}.
#ifndef {{GUARD}}
#define {{GUARD}}

#include <vector>

#include <systemc>
#include <tlm>
#include <tlm_utils/multi_passthrough_initiator_socket.h>
#include <tlm_utils/multi_passthrough_target_socket.h>

{{FAN_OUT}}
struct {{CLASS}} : sc_core::sc_module {
{{SOCKETS}}    sc_core::sc_time delay;

    {{CLASS}}(sc_core::sc_module_name name, sc_core::sc_time delay_)
        : sc_core::sc_module(name),{{SOCKET_INITS}} delay(delay_) {
{{REGISTER}}    }

{{HANDLERS}}private:
{{TRANSFER}}
    template <typename Socket>
    static void append(std::vector<tlm::tlm_fw_transport_if<>*>& dests, Socket& socket) {
        for (unsigned i = 0; i < socket.size(); ++i) dests.push_back(socket[i]);
    }
};

#endif
)";

inline constexpr std::string_view kTargetTemplate = R"(// Generated by tlmforge from target module {{SPEC}}.
#ifndef {{GUARD}}
#define {{GUARD}}

#include <utility>
#include <vector>

#include <systemc>
#include <tlm>
#include <tlm_utils/multi_passthrough_target_socket.h>

struct {{CLASS}} : sc_core::sc_module {
{{SOCKETS}}    std::vector<sc_core::sc_time> socket_delays;
    std::vector<unsigned char> storage;
    static constexpr sc_dt::uint64 base = {{BASE}};
    static constexpr bool dmi_allowed = {{DMI}};

    {{CLASS}}(sc_core::sc_module_name name, std::vector<sc_core::sc_time> delays)
        : sc_core::sc_module(name),{{SOCKET_INITS}} socket_delays(std::move(delays)), storage({{SIZE}}, {{FILL}}) {
{{REGISTER}}    }

{{HANDLERS}}private:
{{TRANSFER}}
    void serve(unsigned socket, tlm::tlm_generic_payload& trans, sc_core::sc_time& t) {
        t += socket_delays[socket] + transfer(trans.get_data_length());
        trans.set_dmi_allowed(dmi_allowed);
        const tlm::tlm_command cmd = trans.get_command();
        if (cmd == tlm::TLM_IGNORE_COMMAND) {
            trans.set_response_status(tlm::TLM_OK_RESPONSE);
            return;
        }
        unsigned char* data = trans.get_data_ptr();
        const unsigned len = trans.get_data_length();
        const unsigned sw = trans.get_streaming_width();
        const unsigned char* be = trans.get_byte_enable_ptr();
        const unsigned be_len = trans.get_byte_enable_length();
        for (unsigned i = 0; i < len; ++i) {
            const sc_dt::uint64 a = trans.get_address() + i % sw;
            if (a < base || a - base >= storage.size()) {
                trans.set_response_status(tlm::TLM_ADDRESS_ERROR_RESPONSE);
                return;
            }
            if (be && be_len && be[i % be_len] != tlm::TLM_BYTE_ENABLED) continue;
            if (cmd == tlm::TLM_WRITE_COMMAND)
                storage[a - base] = data[i];
            else
                data[i] = storage[a - base];
        }
        trans.set_response_status(tlm::TLM_OK_RESPONSE);
    }
};

#endif
)";

inline constexpr std::string_view kTopTemplate = R"(// Generated by tlmforge.
//
// CPUs:
{{CPUS}}//
// Buses:
{{BUSES}}//
// Delays below are already scaled by each instance's CPU frequency.

#include <systemc>
#include <tlm>
#include <tlm_utils/tlm_quantumkeeper.h>

{{INCLUDES}}
int sc_main(int, char*[]) {
    tlm_utils::tlm_quantumkeeper::set_global_quantum({{QUANTUM}});

{{INSTANCES}}
{{BINDINGS}}
    sc_core::sc_start();
    return 0;
}
)";

inline std::string socket_decls(const std::string& cls, const char* kind, const char* prefix, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i)
        out += std::string("    tlm_utils::multi_passthrough_") + kind + "_socket<" + cls + "> " + prefix +
               std::to_string(i) + ";\n";
    return out;
}

inline std::string socket_inits(const char* prefix, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string s = prefix + std::to_string(i);
        out += " " + s + "(\"" + s + "\"),";
    }
    return out;
}

inline std::string register_in_sockets(const std::string& cls, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i)
        out += "        in" + std::to_string(i) + ".register_b_transport(this, &" + cls + "::b_transport_in" +
               std::to_string(i) + ");\n";
    return out;
}

inline std::string initiator_workload(const InitiatorSpec& s) {
    std::string out;
    for (const auto& t : s.workload) {
        const GenericPayload p = build_payload(t);
        const std::size_t len = p.data_length;
        const std::string command = t.command == Command::Write  ? "tlm::TLM_WRITE_COMMAND"
                                    : t.command == Command::Read ? "tlm::TLM_READ_COMMAND"
                                                                 : "tlm::TLM_IGNORE_COMMAND";
        out += "        {\n";
        out += "            unsigned char data[" + std::to_string(std::max<std::size_t>(len, 1)) + "] = {" +
               byte_list(p.data) + "};\n";
        if (t.byte_enables)
            out += "            unsigned char enables[" + std::to_string(t.byte_enables->size()) + "] = {" +
                   byte_list(*t.byte_enables) + "};\n";
        out += "            for (unsigned k = 0; k < " + std::to_string(t.repeat) + "; ++k) {\n";
        if (t.period) {
            out += "                sc_core::sc_time start = qk.get_current_time();\n";
            out += "                const sc_core::sc_time period = " + ps_time(*t.period) + ";\n";
            out += "                if (has_prev && start < prev_start + period) {\n";
            out += "                    qk.inc(prev_start + period - start);\n";
            out += "                    start = prev_start + period;\n";
            out += "                }\n";
            out += "                prev_start = start;\n";
            out += "                has_prev = true;\n";
        } else {
            out += "                prev_start = qk.get_current_time();\n";
            out += "                has_prev = true;\n";
        }
        out += "                tlm::tlm_generic_payload trans;\n";
        out += "                trans.set_command(" + command + ");\n";
        out += "                trans.set_address(" + hex_u64(t.address) + ");\n";
        out += "                trans.set_data_ptr(data);\n";
        out += "                trans.set_data_length(" + std::to_string(len) + ");\n";
        out += "                trans.set_streaming_width(" + std::to_string(p.streaming_width) + ");\n";
        if (t.byte_enables) {
            out += "                trans.set_byte_enable_ptr(enables);\n";
            out += "                trans.set_byte_enable_length(" + std::to_string(t.byte_enables->size()) + ");\n";
        } else {
            out += "                trans.set_byte_enable_ptr(nullptr);\n";
            out += "                trans.set_byte_enable_length(0);\n";
        }
        out += "                trans.set_dmi_allowed(false);\n";
        out += "                trans.set_response_status(tlm::TLM_INCOMPLETE_RESPONSE);\n";
        const SimTime xfer = transfer_time(len, s.bandwidth);
        out += "                qk.inc(delay" + (xfer.is_zero() ? std::string() : " + " + ps_time(xfer)) + ");\n";
        out += "                sc_core::sc_time t = qk.get_local_time();\n";
        out += "                tlmforge_fan_out(bound(socket" + std::to_string(t.socket) + "), trans, t);\n";
        out += "                qk.set(t);\n";
        out += "                if (qk.need_sync()) qk.sync();\n";
        out += "            }\n";
        out += "        }\n";
    }
    return out;
}

inline std::string router_handlers(const RouterSpec& s) {
    std::string out;
    for (std::size_t in = 0; in < s.in_socket_count; ++in) {
        out += "    void b_transport_in" + std::to_string(in) +
               "(int, tlm::tlm_generic_payload& trans, sc_core::sc_time& t) {\n";
        out += "        t += delay + transfer(trans.get_data_length());\n";
        auto it = s.connections.find(in);
        if (it == s.connections.end()) {
            out += "        trans.set_response_status(tlm::TLM_ADDRESS_ERROR_RESPONSE);\n";
        } else {
            auto outs = it->second;
            std::sort(outs.begin(), outs.end());
            out += "        std::vector<tlm::tlm_fw_transport_if<>*> dests;\n";
            if (s.address_map.empty()) {
                for (auto o : outs) out += "        append(dests, out" + std::to_string(o) + ");\n";
            } else {
                out += "        const sc_dt::uint64 a = trans.get_address();\n";
                bool first = true;
                for (auto o : outs) {
                    auto range = s.address_map.find(o);
                    if (range == s.address_map.end()) continue;
                    out += std::string(first ? "        if" : "        else if") + " (a >= " +
                           hex_u64(range->second.base) + " && a < " + hex_u64(range->second.limit) + ")\n";
                    out += "            append(dests, out" + std::to_string(o) + ");\n";
                    first = false;
                }
                out += "        if (dests.empty()) {\n";
                out += "            trans.set_response_status(tlm::TLM_ADDRESS_ERROR_RESPONSE);\n";
                out += "            return;\n";
                out += "        }\n";
            }
            out += "        tlmforge_fan_out(dests, trans, t);\n";
        }
        out += "    }\n\n";
    }
    return out;
}

inline std::string target_handlers(std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i)
        out += "    void b_transport_in" + std::to_string(i) +
               "(int, tlm::tlm_generic_payload& trans, sc_core::sc_time& t) { serve(" + std::to_string(i) +
               ", trans, t); }\n\n";
    return out;
}

} // namespace detail

/// Emits SystemC TLM-2.0 (loosely-timed, blocking transport) sources: a
/// `top.cpp` that instantiates and binds every instance, plus one header per
/// module spec named after its sanitized class name.
inline SourceBundle export_tlm(const SystemDescription& d) {
    if (auto diags = validate_description(d); !diags.empty())
        throw Error("E-INVALID", "cannot export: " + format_diagnostic(diags.front()));

    detail::IdentifierTable ids;
    std::map<std::string, std::string> class_of;
    for (const auto& m : d.modules) class_of[module_name(m)] = ids.claim(module_name(m));
    std::map<std::string, std::string> var_of;
    for (const auto& inst : d.instances) var_of[inst.name] = ids.claim(inst.name);

    SourceBundle modules;
    for (const auto& m : d.modules) {
        const std::string& cls = class_of[module_name(m)];
        std::map<std::string, std::string> vars{{"CLASS", cls},
                                                {"GUARD", detail::guard_for(cls)},
                                                {"SPEC", detail::c_string(module_name(m))},
                                                {"FAN_OUT", std::string(detail::kFanOutHelper)}};
        std::string text;
        if (const auto* s = std::get_if<InitiatorSpec>(&m)) {
            vars["SOCKETS"] = detail::socket_decls(cls, "initiator", "socket", s->socket_count);
            vars["SOCKET_INITS"] = detail::socket_inits("socket", s->socket_count);
            vars["WORKLOAD"] = detail::initiator_workload(*s);
            text = detail::replace_all(std::string(detail::kInitiatorTemplate), vars);
        } else if (const auto* s = std::get_if<RouterSpec>(&m)) {
            vars["SOCKETS"] = detail::socket_decls(cls, "target", "in", s->in_socket_count) +
                              detail::socket_decls(cls, "initiator", "out", s->out_socket_count);
            vars["SOCKET_INITS"] =
                detail::socket_inits("in", s->in_socket_count) + detail::socket_inits("out", s->out_socket_count);
            vars["REGISTER"] = detail::register_in_sockets(cls, s->in_socket_count);
            vars["HANDLERS"] = detail::router_handlers(*s);
            vars["TRANSFER"] = detail::transfer_function(s->bandwidth);
            text = detail::replace_all(std::string(detail::kRouterTemplate), vars);
        } else if (const auto* s = std::get_if<TargetSpec>(&m)) {
            const auto n = s->socket_delays.size();
            vars["SOCKETS"] = detail::socket_decls(cls, "target", "in", n);
            vars["SOCKET_INITS"] = detail::socket_inits("in", n);
            vars["REGISTER"] = detail::register_in_sockets(cls, n);
            vars["HANDLERS"] = detail::target_handlers(n);
            vars["TRANSFER"] = detail::transfer_function(s->bandwidth);
            vars["BASE"] = detail::hex_u64(s->storage_base);
            vars["SIZE"] = std::to_string(s->storage_size);
            vars["FILL"] = std::to_string(s->storage_fill);
            vars["DMI"] = s->dmi_allowed ? "true" : "false";
            text = detail::replace_all(std::string(detail::kTargetTemplate), vars);
        }
        modules.push_back({cls + ".h", std::move(text)});
    }

    std::string cpus, buses, includes, instances, bindings;
    for (const auto& c : d.cpus) cpus += "//   " + c.name + " " + format_frequency(c.frequency_ghz) + "\n";
    if (d.buses.empty()) buses += "//   (none)\n";
    for (const auto& b : d.buses) {
        buses += "//   " + b.name + ":";
        for (const auto& c : b.cpus) buses += " " + c;
        buses += "\n";
    }
    for (const auto& f : modules) includes += "#include \"" + f.name + "\"\n";
    for (const auto& inst : d.instances) {
        const auto& spec = *d.module_of(inst);
        const Ratio f = d.find_cpu(inst.cpu)->frequency_ghz;
        std::string args;
        if (const auto* s = std::get_if<InitiatorSpec>(&spec)) args = detail::ps_time(effective_delay(s->delay, f));
        if (const auto* s = std::get_if<RouterSpec>(&spec)) args = detail::ps_time(effective_delay(s->delay, f));
        if (const auto* s = std::get_if<TargetSpec>(&spec)) {
            args = "{";
            for (std::size_t i = 0; i < s->socket_delays.size(); ++i)
                args += (i ? ", " : "") + detail::ps_time(effective_delay(s->socket_delays[i], f));
            args += "}";
        }
        instances += "    " + class_of[inst.module] + " " + var_of[inst.name] + "(" + detail::c_string(inst.name) +
                     ", " + args + "); // " + inst.cpu + " @ " + format_frequency(f) + "\n";
    }
    for (const auto& b : d.bindings) {
        const auto* from_spec = d.module_of(*d.find_instance(b.from.instance));
        const char* out_prefix = std::holds_alternative<InitiatorSpec>(*from_spec) ? ".socket" : ".out";
        bindings += "    " + var_of[b.from.instance] + out_prefix + std::to_string(b.from.socket) + ".bind(" +
                    var_of[b.to.instance] + ".in" + std::to_string(b.to.socket) + ");\n";
    }
    if (d.instances.empty()) instances = "    // no instances\n";
    std::string top = detail::replace_all(std::string(detail::kTopTemplate),
                                          {{"CPUS", cpus},
                                           {"BUSES", buses},
                                           {"INCLUDES", includes},
                                           {"QUANTUM", detail::ps_time(d.global_quantum)},
                                           {"INSTANCES", instances},
                                           {"BINDINGS", bindings}});

    SourceBundle bundle;
    bundle.push_back({"top.cpp", std::move(top)});
    for (auto& f : modules) bundle.push_back(std::move(f));
    return bundle;
}

} // namespace tlmforge
