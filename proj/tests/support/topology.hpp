#pragma once

// Random acyclic platforms: one initiator, up to three routers, and targets,
// at most six instances in total. Each generated topology carries its raw
// numbers so a test can compute the expected timing by brute force.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "support/oracles.hpp"
#include "tlmforge/tlmforge.hpp"

namespace topo {

using Frac = std::pair<std::uint64_t, std::uint64_t>;

enum class Kind { Initiator, Router, Target };

struct Node {
    Kind kind = Kind::Target;
    Frac freq{1, 1};
    std::uint64_t delay_ps = 0;
    std::vector<std::uint64_t> socket_delays_ps;
    std::optional<Frac> bandwidth;
    std::size_t out_count = 1;
    std::size_t in_count = 0;
};

struct Edge {
    std::size_t from, from_socket, to, to_socket;
};

struct Topology {
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::size_t length = 4;
    std::size_t repeat = 1;
};

struct Options {
    /// Delays in whole ns, frequencies in {1,2,4,5} GHz and no bandwidth, so
    /// every scaled delay stays integral when all frequencies double.
    bool divisible = false;
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(eng_);
    }
    bool coin() { return uniform(0, 1) == 1; }
    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[uniform(0, v.size() - 1)];
    }

private:
    std::mt19937_64 eng_;
};

inline Topology generate(Rng& rng, const Options& opt = {}) {
    static const std::vector<Frac> any_freq = {{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {1, 2}, {3, 2}, {5, 4}, {7, 3}};
    static const std::vector<Frac> even_freq = {{1, 1}, {2, 1}, {4, 1}, {5, 1}};
    static const std::vector<Frac> bandwidths = {{512, 1}, {1, 1}, {3, 2}, {100, 7}};
    auto delay = [&] { return opt.divisible ? rng.uniform(0, 40) * 1000 : rng.uniform(0, 40000); };
    auto freq = [&] { return rng.pick(opt.divisible ? even_freq : any_freq); };
    auto bw = [&]() -> std::optional<Frac> {
        if (opt.divisible || rng.coin()) return std::nullopt;
        return rng.pick(bandwidths);
    };

    Topology t;
    t.length = rng.uniform(1, 8);
    t.repeat = rng.uniform(1, 3);
    const std::size_t routers = rng.uniform(0, 3);
    const std::size_t targets = rng.uniform(1, 5 - routers);

    t.nodes.push_back({Kind::Initiator, freq(), delay(), {}, bw(), 1, 0});
    for (std::size_t i = 0; i < routers; ++i) t.nodes.push_back({Kind::Router, freq(), delay(), {}, bw(), rng.uniform(1, 3), 0});
    for (std::size_t i = 0; i < targets; ++i) t.nodes.push_back({Kind::Target, freq(), 0, {}, bw(), 0, 0});

    auto connect = [&](std::size_t from, std::size_t to) {
        auto& dst = t.nodes[to];
        std::size_t out = t.nodes[from].kind == Kind::Initiator ? 0 : rng.uniform(0, t.nodes[from].out_count - 1);
        t.edges.push_back({from, out, to, dst.in_count++});
        if (dst.kind == Kind::Target) dst.socket_delays_ps.push_back(delay());
    };
    for (std::size_t to = 1; to < t.nodes.size(); ++to) {
        const std::size_t last_pred = std::min(to - 1, routers);
        std::vector<std::size_t> preds;
        for (std::size_t p = 0; p <= last_pred; ++p)
            if (rng.coin()) preds.push_back(p);
        if (preds.empty()) preds.push_back(rng.uniform(0, last_pred));
        for (auto p : preds) connect(p, to);
    }
    for (std::size_t r = 1; r <= routers; ++r) {
        bool has_succ = std::any_of(t.edges.begin(), t.edges.end(), [&](const Edge& e) { return e.from == r; });
        if (!has_succ) connect(r, rng.uniform(routers + 1, t.nodes.size() - 1));
    }
    return t;
}

inline std::string ps(std::uint64_t v) { return std::to_string(v) + "ps"; }

inline tlmforge::SystemDescription to_description(const Topology& t) {
    using namespace tlmforge;
    SystemDescription d;
    BusSpec bus{"Bus", {}};
    auto ratio = [](Frac f) { return Ratio(f.first, f.second); };
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& n = t.nodes[i];
        const std::string id = std::to_string(i);
        d.cpus.push_back({"C" + id, ratio(n.freq)});
        bus.cpus.push_back("C" + id);
        std::optional<Ratio> bw;
        if (n.bandwidth) bw = ratio(*n.bandwidth);
        if (n.kind == Kind::Initiator) {
            InitiatorSpec s;
            s.name = "M" + id;
            s.delay = SimTime(n.delay_ps);
            s.bandwidth = bw;
            TransactionTemplate w;
            w.command = Command::Write;
            w.address = 0;
            for (std::size_t b = 0; b < t.length; ++b) w.data.push_back(static_cast<std::uint8_t>(b + 1));
            w.length = t.length;
            w.repeat = t.repeat;
            s.workload.push_back(w);
            d.modules.emplace_back(s);
        } else if (n.kind == Kind::Router) {
            RouterSpec s;
            s.name = "M" + id;
            s.delay = SimTime(n.delay_ps);
            s.bandwidth = bw;
            s.in_socket_count = std::max<std::size_t>(n.in_count, 1);
            s.out_socket_count = n.out_count;
            std::vector<std::size_t> used;
            for (const auto& e : t.edges)
                if (e.from == i) used.push_back(e.from_socket);
            std::sort(used.begin(), used.end());
            used.erase(std::unique(used.begin(), used.end()), used.end());
            for (std::size_t in = 0; in < n.in_count; ++in) s.connections[in] = used;
            d.modules.emplace_back(s);
        } else {
            TargetSpec s;
            s.name = "M" + id;
            for (auto v : n.socket_delays_ps) s.socket_delays.push_back(SimTime(v));
            s.bandwidth = bw;
            s.storage_size = 64;
            d.modules.emplace_back(s);
        }
        d.instances.push_back({"N" + id, "M" + id, "C" + id});
    }
    if (bus.cpus.size() >= 2) d.buses.push_back(bus);
    for (const auto& e : t.edges)
        d.bindings.push_back({{"N" + std::to_string(e.from), e.from_socket}, {"N" + std::to_string(e.to), e.to_socket}});
    return d;
}

/// Every initiator-to-target path, as the list of per-hop latencies.
inline void enumerate_paths(const Topology& t, std::size_t node, std::size_t in_socket, std::uint64_t acc,
                            std::vector<std::uint64_t>& sums) {
    const auto& n = t.nodes[node];
    const std::uint64_t xfer = oracle::transfer_ps(t.length, n.bandwidth);
    if (n.kind == Kind::Target) {
        sums.push_back(acc + oracle::scaled_ps(n.socket_delays_ps[in_socket], n.freq.first, n.freq.second) + xfer);
        return;
    }
    const std::uint64_t own = oracle::scaled_ps(n.delay_ps, n.freq.first, n.freq.second) + xfer;
    for (const auto& e : t.edges)
        if (e.from == node) enumerate_paths(t, e.to, e.to_socket, acc + own, sums);
}

/// Expected end of the initiator's last activation.
inline std::uint64_t expected_end(const Topology& t) {
    std::vector<std::uint64_t> sums;
    enumerate_paths(t, 0, 0, 0, sums);
    const std::uint64_t per_txn = *std::max_element(sums.begin(), sums.end());
    return t.repeat * per_txn;
}

} // namespace topo
