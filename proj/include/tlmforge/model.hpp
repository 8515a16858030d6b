#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "components.hpp"
#include "error.hpp"
#include "kernel.hpp"
#include "sysdesc.hpp"
#include "trace.hpp"

namespace tlmforge {

/// Overrides applied on top of the description's own options.
struct RunOptions {
    std::optional<SimTime> global_quantum;
    std::optional<std::uint64_t> event_limit;
};

/// An elaborated platform, ready to run once.
class Model {
public:
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    const SystemDescription& description() const { return desc_; }
    SimTime global_quantum() const { return quantum_; }
    Scheduler& scheduler() { return scheduler_; }
    const Scheduler& scheduler() const { return scheduler_; }

    /// Starts every initiator at time 0, in description order, and runs to
    /// completion. Returns the final kernel time.
    SimTime run() {
        if (ran_) throw Error("E-RERUN", "model has already run");
        ran_ = true;
        for (auto& [name, init] : initiators_order_) scheduler_.spawn(init->run(quantum_));
        return scheduler_.run();
    }

    std::vector<TraceRecord> trace() const { return trace_.sorted(); }

    InitiatorModel* initiator(std::string_view name) { return lookup(initiators_, name); }
    TargetModel* target(std::string_view name) { return lookup(targets_, name); }
    RouterModel* router(std::string_view name) { return lookup(routers_, name); }

    Storage* storage(std::string_view name) {
        auto* t = target(name);
        return t ? &t->storage() : nullptr;
    }

    /// Callee side of an instance, for direct transport calls in tests and
    /// tools. Null for initiators and unknown names.
    TransportTarget* port(std::string_view name) {
        if (auto* t = target(name)) return t;
        return router(name);
    }

private:
    friend std::unique_ptr<Model> elaborate(const SystemDescription&, const RunOptions&);

    Model(SystemDescription desc, SimTime quantum, std::uint64_t event_limit)
        : desc_(std::move(desc)), quantum_(quantum), scheduler_(event_limit) {}

    template <typename T>
    static T* lookup(std::map<std::string, std::unique_ptr<T>, std::less<>>& items, std::string_view name) {
        auto it = items.find(name);
        return it == items.end() ? nullptr : it->second.get();
    }

    SystemDescription desc_;
    SimTime quantum_;
    Scheduler scheduler_;
    TraceSink trace_;
    std::uint64_t txn_counter_ = 0;
    bool ran_ = false;
    std::map<std::string, std::unique_ptr<InitiatorModel>, std::less<>> initiators_;
    std::map<std::string, std::unique_ptr<TargetModel>, std::less<>> targets_;
    std::map<std::string, std::unique_ptr<RouterModel>, std::less<>> routers_;
    std::vector<std::pair<std::string, InitiatorModel*>> initiators_order_;
};

/// Builds the runtime model. Refuses descriptions with validation
/// diagnostics (E-INVALID), workload or router out-sockets that are used but
/// unbound (E-UNBOUND), and binding cycles (E-CYCLE).
inline std::unique_ptr<Model> elaborate(const SystemDescription& d, const RunOptions& options = {}) {
    if (auto diags = validate_description(d); !diags.empty()) {
        std::string msg = std::to_string(diags.size()) + " diagnostic(s); first: " + format_diagnostic(diags.front());
        throw Error("E-INVALID", msg);
    }

    std::map<std::string, std::set<std::string>> edges;
    for (const auto& b : d.bindings) edges[b.from.instance].insert(b.to.instance);
    std::map<std::string, int> color;
    std::function<void(const std::string&)> visit = [&](const std::string& n) {
        color[n] = 1;
        for (const auto& m : edges[n]) {
            if (color[m] == 1) throw Error("E-CYCLE", "binding cycle through '" + m + "'");
            if (color[m] == 0) visit(m);
        }
        color[n] = 2;
    };
    for (const auto& inst : d.instances)
        if (color[inst.name] == 0) visit(inst.name);

    std::unique_ptr<Model> m(new Model(d, options.global_quantum.value_or(d.global_quantum),
                                       options.event_limit.value_or(d.event_limit)));
    for (const auto& inst : d.instances) {
        const auto& spec = *d.module_of(inst);
        const Ratio f = d.find_cpu(inst.cpu)->frequency_ghz;
        if (const auto* s = std::get_if<InitiatorSpec>(&spec)) {
            auto model = std::make_unique<InitiatorModel>(inst.name, *s, f, m->scheduler_, m->trace_, m->txn_counter_);
            m->initiators_order_.emplace_back(inst.name, model.get());
            m->initiators_.emplace(inst.name, std::move(model));
        } else if (const auto* s = std::get_if<TargetSpec>(&spec)) {
            m->targets_.emplace(inst.name, std::make_unique<TargetModel>(inst.name, *s, f, m->scheduler_, m->trace_));
        } else if (const auto* s = std::get_if<RouterSpec>(&spec)) {
            m->routers_.emplace(inst.name, std::make_unique<RouterModel>(inst.name, *s, f, m->scheduler_, m->trace_));
        }
    }

    for (const auto& b : d.bindings) {
        SocketRef to{m->port(b.to.instance), b.to.socket};
        if (auto* i = m->initiator(b.from.instance))
            i->bind(b.from.socket, to);
        else if (auto* r = m->router(b.from.instance))
            r->bind(b.from.socket, to);
    }

    for (const auto& [name, init] : m->initiators_)
        for (const auto& t : init->spec().workload)
            if (init->bound(t.socket).empty())
                throw Error("E-UNBOUND", "initiator '" + name + "' socket " + std::to_string(t.socket) + " is unbound");
    for (const auto& [name, router] : m->routers_)
        for (const auto& [in, outs] : router->spec().connections)
            for (auto out : outs)
                if (router->bound(out).empty())
                    throw Error("E-UNBOUND", "router '" + name + "' out-socket " + std::to_string(out) + " is unbound");
    return m;
}

} // namespace tlmforge
