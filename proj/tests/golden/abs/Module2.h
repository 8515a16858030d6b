// Generated by tlmforge from target module "Module2".
#ifndef TLMFORGE_MODULE2_H
#define TLMFORGE_MODULE2_H

#include <utility>
#include <vector>

#include <systemc>
#include <tlm>
#include <tlm_utils/multi_passthrough_target_socket.h>

struct Module2 : sc_core::sc_module {
    tlm_utils::multi_passthrough_target_socket<Module2> in0;
    std::vector<sc_core::sc_time> socket_delays;
    std::vector<unsigned char> storage;
    static constexpr sc_dt::uint64 base = 0x0ULL;
    static constexpr bool dmi_allowed = true;

    Module2(sc_core::sc_module_name name, std::vector<sc_core::sc_time> delays)
        : sc_core::sc_module(name), in0("in0"), socket_delays(std::move(delays)), storage(256, 0) {
        in0.register_b_transport(this, &Module2::b_transport_in0);
    }

    void b_transport_in0(int, tlm::tlm_generic_payload& trans, sc_core::sc_time& t) { serve(0, trans, t); }

private:
    static sc_core::sc_time transfer(unsigned) { return sc_core::SC_ZERO_TIME; }

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
