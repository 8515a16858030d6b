#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "tlmforge/tlmforge.hpp"

using namespace tlmforge;
using namespace tlmforge::literals;

namespace {

std::vector<std::string> codes(const std::vector<Diagnostic>& diags) {
    std::vector<std::string> out;
    for (const auto& d : diags) out.push_back(d.code);
    return out;
}

std::vector<std::string> validate_codes(const SystemDescription& d) { return codes(validate_description(d)); }

InitiatorSpec& brake(SystemDescription& d) { return std::get<InitiatorSpec>(d.modules[0]); }
RouterSpec& router(SystemDescription& d) { return std::get<RouterSpec>(d.modules[1]); }

/// Random description whose every field survives the text format.
class DescriptionGen {
public:
    explicit DescriptionGen(std::uint64_t seed) : rng_(seed) {}

    SystemDescription operator()() {
        SystemDescription d;
        const std::size_t ncpu = pick(1, 4);
        for (std::size_t i = 0; i < ncpu; ++i) d.cpus.push_back({name("cpu"), Ratio(pick(1, 9000), pick(1, 7))});
        if (ncpu >= 2 && coin()) d.buses.push_back({name("bus"), {d.cpus[0].name, d.cpus[1].name}});
        const std::size_t nmod = pick(0, 4);
        for (std::size_t i = 0; i < nmod; ++i) {
            switch (pick(0, 2)) {
            case 0: d.modules.emplace_back(initiator()); break;
            case 1: d.modules.emplace_back(target()); break;
            default: d.modules.emplace_back(router()); break;
            }
        }
        for (std::size_t i = 0, n = pick(0, 4); i < n; ++i)
            d.instances.push_back({name("inst"), name("mod"), d.cpus[pick(0, ncpu - 1)].name});
        for (std::size_t i = 0, n = pick(0, 3); i < n; ++i)
            d.bindings.push_back({{name("a"), pick(0, 5)}, {name("b"), pick(0, 5)}});
        for (std::size_t i = 0, n = pick(0, 2); i < n; ++i) d.constraints.push_back({name("c"), time()});
        d.global_quantum = time();
        d.event_limit = pick(1, 1u << 30);
        if (coin()) d.trace_path = "out/" + name("t") + ".csv";
        return d;
    }

private:
    std::size_t pick(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }
    bool coin() { return pick(0, 1) == 1; }

    std::string name(const std::string& stem) {
        static const std::vector<std::string> odd = {"", " x", "-y", "\"q\"", "\\s", "\xC3\xA9", "/p", "~0", "{}", "a,b"};
        return stem + std::to_string(pick(0, 999)) + odd[pick(0, odd.size() - 1)];
    }

    SimTime time() {
        static const std::uint64_t scale[] = {1, 1000, 1'000'000, 1'000'000'000};
        return SimTime(pick(0, 5000) * scale[pick(0, 3)]);
    }

    std::optional<Ratio> bandwidth() {
        if (coin()) return std::nullopt;
        return Ratio(pick(1, 4096), pick(1, 9));
    }

    std::vector<std::uint8_t> bytes(std::size_t n) {
        std::vector<std::uint8_t> out(n);
        for (auto& b : out) b = static_cast<std::uint8_t>(pick(0, 255));
        return out;
    }

    InitiatorSpec initiator() {
        InitiatorSpec s;
        s.name = name("init");
        s.delay = time();
        s.socket_count = pick(1, 3);
        s.bandwidth = bandwidth();
        s.use_dmi = coin();
        for (std::size_t i = 0, n = pick(0, 3); i < n; ++i) {
            TransactionTemplate t;
            t.command = static_cast<Command>(pick(0, 2));
            t.address = coin() ? pick(0, 255) : (std::uint64_t{1} << 63) + pick(0, 99);
            if (t.command == Command::Write) {
                t.data = bytes(pick(0, 6));
                t.length = t.data.size();
            } else {
                t.length = pick(0, 64);
            }
            t.socket = pick(0, 3);
            t.repeat = pick(1, 5);
            if (coin()) t.streaming_width = pick(1, 8);
            if (coin()) t.byte_enables = bytes(pick(1, 4));
            if (coin()) t.period = time();
            s.workload.push_back(std::move(t));
        }
        return s;
    }

    TargetSpec target() {
        TargetSpec s;
        s.name = name("tgt");
        for (std::size_t i = 0, n = pick(1, 3); i < n; ++i) s.socket_delays.push_back(time());
        s.bandwidth = bandwidth();
        s.storage_base = coin() ? 0 : pick(0, 1u << 31) * 4096;
        s.storage_size = pick(1, 1u << 20);
        s.storage_fill = static_cast<std::uint8_t>(pick(0, 255));
        s.dmi_allowed = coin();
        return s;
    }

    RouterSpec router() {
        RouterSpec s;
        s.name = name("rt");
        s.delay = time();
        s.in_socket_count = pick(1, 3);
        s.out_socket_count = pick(1, 4);
        s.bandwidth = bandwidth();
        for (std::size_t in = 0; in < s.in_socket_count; ++in)
            if (coin()) {
                std::vector<std::size_t> outs;
                for (std::size_t o = 0, n = pick(1, 3); o < n; ++o) outs.push_back(pick(0, 5));
                s.connections[in] = outs;
            }
        if (coin())
            for (std::size_t o = 0; o < s.out_socket_count; ++o) s.address_map[o] = {o * 0x100, o * 0x100 + pick(1, 0x100)};
        return s;
    }

    std::mt19937_64 rng_;
};

} // namespace

TEST(ParseDescription, AbsFixture) {
    auto r = parse_description(fixture::abs_text());
    ASSERT_TRUE(r.ok()) << format_diagnostic(r.diagnostics.front());
    EXPECT_EQ(r.description.cpus.size(), 6u);
    EXPECT_EQ(r.description.modules.size(), 3u);
    EXPECT_EQ(r.description.instances.size(), 6u);
    EXPECT_EQ(r.description.bindings.size(), 5u);
    EXPECT_EQ(r.description.cpus[1].frequency_ghz, Ratio(5));
    EXPECT_EQ(brake(r.description).delay, 10_ns);
    EXPECT_EQ(router(r.description).delay, 5_ns);
    EXPECT_EQ(std::get<TargetSpec>(r.description.modules[2]).socket_delays, std::vector<SimTime>{20_ns});
}

TEST(ParseDescription, EmptyDocumentMissesCpus) {
    for (const char* text : {"", "  \n", "{}"}) {
        auto r = parse_description(text);
        ASSERT_EQ(codes(r.diagnostics), std::vector<std::string>{"E-MISSING"}) << "text: '" << text << "'";
        EXPECT_EQ(r.diagnostics[0].location, "/cpus");
    }
}

TEST(ParseDescription, NegativeFrequencyIsTypeError) {
    auto r = parse_description(R"({"cpus": [{"name": "A", "frequency": "-1"}]})");
    ASSERT_EQ(codes(r.diagnostics), std::vector<std::string>{"E-TYPE"});
    EXPECT_EQ(r.diagnostics[0].location, "/cpus/0/frequency");
    EXPECT_EQ(r.diagnostics[0].line, 1u);
    EXPECT_EQ(r.diagnostics[0].column, 38u);
}

TEST(ParseDescription, ZeroFrequencyIsTypeError) {
    auto r = parse_description(R"({"cpus": [{"name": "A", "frequency": "0GHz"}]})");
    EXPECT_EQ(codes(r.diagnostics), std::vector<std::string>{"E-TYPE"});
}

TEST(ParseDescription, SyntaxErrorCarriesPosition) {
    auto r = parse_description("{\n  \"cpus\": [\n    {\"name\": \"A\",, }\n  ]\n}\n");
    ASSERT_EQ(codes(r.diagnostics), std::vector<std::string>{"E-SYNTAX"});
    EXPECT_EQ(r.diagnostics[0].line, 3u);
    EXPECT_EQ(r.diagnostics[0].column, 18u);
}

TEST(ParseDescription, DiagnosticsPointAtOffendingLine) {
    const std::string text = "{\n"
                             "  \"cpus\": [ { \"name\": \"A\", \"frequency\": \"1GHz\" } ],\n"
                             "  \"modules\": [\n"
                             "    { \"kind\": \"target\", \"name\": \"T\", \"socket_delays\": [\"1ns\"],\n"
                             "      \"storage\": { \"size\": 0 } }\n"
                             "  ]\n"
                             "}\n";
    auto r = parse_description(text);
    ASSERT_EQ(codes(r.diagnostics), std::vector<std::string>{"E-TYPE"});
    EXPECT_EQ(r.diagnostics[0].location, "/modules/0/storage/size");
    EXPECT_EQ(r.diagnostics[0].line, 5u);
    EXPECT_EQ(format_diagnostic(r.diagnostics[0], "x.json").rfind("x.json:5:", 0), 0u);
}

TEST(ParseDescription, UnknownFieldAndMissingField) {
    auto r = parse_description(R"({"cpus": [{"name": "A", "frequency": "1GHz", "cores": 2}], "instances": [{"name": "i"}]})");
    EXPECT_EQ(codes(r.diagnostics), (std::vector<std::string>{"E-TYPE", "E-MISSING", "E-MISSING"}));
}

TEST(ParseDescription, WorkloadShapeRules) {
    auto wrap = [](const std::string& tmpl) {
        return R"({"cpus": [{"name": "A", "frequency": "1GHz"}], "modules": [{"kind": "initiator", "name": "I",
            "delay": "1ns", "workload": [)" + tmpl + "]}]}";
    };
    EXPECT_TRUE(parse_description(wrap(R"({"command": "WRITE", "address": "0x10", "data": "0a0b"})")).ok());
    EXPECT_TRUE(parse_description(wrap(R"({"command": "READ", "address": 16, "length": 2})")).ok());
    EXPECT_EQ(codes(parse_description(wrap(R"({"command": "READ", "address": 0, "data": "00", "length": 1})")).diagnostics),
              std::vector<std::string>{"E-TYPE"});
    EXPECT_EQ(codes(parse_description(wrap(R"({"command": "READ", "address": 0})")).diagnostics),
              std::vector<std::string>{"E-MISSING"});
    EXPECT_EQ(codes(parse_description(wrap(R"({"command": "WRITE", "address": 0, "data": "xyz"})")).diagnostics),
              std::vector<std::string>{"E-TYPE"});
    EXPECT_EQ(codes(parse_description(wrap(R"({"command": "write", "address": 0, "data": "00"})")).diagnostics),
              std::vector<std::string>{"E-TYPE"});

    auto padded = parse_description(wrap(R"({"command": "WRITE", "address": 0, "data": "0a", "length": 3})"));
    ASSERT_TRUE(padded.ok());
    EXPECT_EQ(std::get<InitiatorSpec>(padded.description.modules[0]).workload[0].data,
              (std::vector<std::uint8_t>{0x0a, 0, 0}));
}

TEST(ParseDescription, BusNeedsTwoCpus) {
    auto r = parse_description(R"({"cpus": [{"name": "A", "frequency": "1GHz"}], "buses": [{"name": "B", "cpus": ["A"]}]})");
    EXPECT_EQ(codes(r.diagnostics), std::vector<std::string>{"E-TYPE"});
}

TEST(ValidateDescription, AbsIsClean) { EXPECT_TRUE(validate_description(fixture::abs()).empty()); }

TEST(ValidateDescription, E001UnknownCpu) {
    auto d = fixture::abs();
    d.instances[0].cpu = "Cpu9";
    auto diags = validate_description(d);
    ASSERT_EQ(codes(diags), std::vector<std::string>{"E001"});
    EXPECT_EQ(diags[0].location, "/instances/0/cpu");
}

TEST(ValidateDescription, E002SocketOutOfRange) {
    auto d = fixture::abs();
    d.bindings[1].from.socket = 7;
    EXPECT_EQ(validate_codes(d), std::vector<std::string>{"E002"});
    d = fixture::abs();
    brake(d).workload[0].socket = 1;
    EXPECT_EQ(validate_codes(d), std::vector<std::string>{"E002"});
}

TEST(ValidateDescription, E003NoSharedBus) {
    auto d = fixture::abs();
    d.buses.erase(d.buses.begin());
    auto diags = validate_description(d);
    ASSERT_EQ(codes(diags), std::vector<std::string>{"E003"});
    EXPECT_EQ(diags[0].location, "/bindings/0");
}

TEST(ValidateDescription, E004ReadBroadcast) {
    auto d = fixture::abs();
    auto& w = brake(d).workload[0];
    w.command = Command::Read;
    w.data.clear();
    w.length = 4;
    auto diags = validate_description(d);
    ASSERT_EQ(codes(diags), std::vector<std::string>{"E004"});
    EXPECT_EQ(diags[0].location, "/instances/1");
}

TEST(ValidateDescription, E004ReadDecodedByAddressIsFine) {
    auto d = fixture::abs();
    auto& w = brake(d).workload[0];
    w.command = Command::Read;
    w.data.clear();
    w.length = 4;
    for (std::size_t o = 0; o < 4; ++o) router(d).address_map[o] = {o * 0x100, (o + 1) * 0x100};
    EXPECT_TRUE(validate_description(d).empty());
    router(d).address_map[1] = {0x80, 0x180};
    EXPECT_EQ(validate_codes(d), std::vector<std::string>{"E004"});
}

TEST(ValidateDescription, E005DuplicateName) {
    auto d = fixture::abs();
    d.cpus.push_back({"Cpu0", Ratio(2)});
    auto diags = validate_description(d);
    ASSERT_EQ(codes(diags), std::vector<std::string>{"E005"});
    EXPECT_EQ(diags[0].location, "/cpus/6/name");
}

TEST(ValidateDescription, E006BadRouterConnection) {
    auto d = fixture::abs();
    router(d).connections[0].push_back(4);
    EXPECT_EQ(validate_codes(d), std::vector<std::string>{"E006"});
    d = fixture::abs();
    router(d).connections[1] = {0};
    EXPECT_EQ(validate_codes(d), std::vector<std::string>{"E006"});
}

TEST(ValidateDescription, E007UnknownConstraintInstance) {
    auto d = fixture::abs();
    d.constraints.push_back({"Nobody", 1_ns});
    EXPECT_EQ(validate_codes(d), std::vector<std::string>{"E007"});
}

TEST(ValidateDescription, E008InSocketBoundTwice) {
    auto d = fixture::abs();
    d.bindings.push_back({{"Router", 0}, {"ABSbrake2", 0}});
    auto diags = validate_description(d);
    ASSERT_EQ(codes(diags), std::vector<std::string>{"E008"});
    EXPECT_EQ(diags[0].location, "/bindings/5/to");
}

TEST(ValidateDescription, E009UnknownReference) {
    auto d = fixture::abs();
    d.instances.push_back({"Spare", "ModuleX", "Cpu0"});
    EXPECT_EQ(validate_codes(d), std::vector<std::string>{"E009"});
    d = fixture::abs();
    d.bindings[0].to.instance = "Ghost";
    EXPECT_EQ(validate_codes(d), std::vector<std::string>{"E009"});
}

TEST(ValidateDescription, SortedByCode) {
    auto d = fixture::abs();
    d.constraints.push_back({"Nobody", 1_ns});
    d.instances[0].cpu = "Cpu9";
    d.cpus.push_back({"Cpu0", Ratio(2)});
    EXPECT_EQ(validate_codes(d), (std::vector<std::string>{"E001", "E005", "E007"}));
}

TEST(ValidateDescription, LocateAddsSourcePositions) {
    const auto text = fixture::abs_text();
    auto d = parse_description(text).description;
    d.constraints[0].instance = "Nobody";
    auto diags = validate_description(d);
    locate(diags, text);
    ASSERT_EQ(diags.size(), 1u);
    EXPECT_GT(diags[0].line, 50u);
    EXPECT_GT(diags[0].column, 1u);
}

TEST(SerializeProperty, ParseInvertsSerialize) {
    DescriptionGen gen(11);
    for (int i = 0; i < 500; ++i) {
        const auto d = gen();
        const auto text = serialize_description(d);
        auto r = parse_description(text);
        ASSERT_TRUE(r.ok()) << format_diagnostic(r.diagnostics.front()) << "\n" << text;
        EXPECT_EQ(r.description, d) << text;
        EXPECT_EQ(serialize_description(r.description), text);
    }
}

TEST(SerializeProperty, AbsRoundTrip) {
    const auto d = fixture::abs();
    auto r = parse_description(serialize_description(d));
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.description, d);
}

TEST(ValidateProperty, PureAndDeterministic) {
    DescriptionGen gen(12);
    for (int i = 0; i < 300; ++i) {
        const auto d = gen();
        const auto before = serialize_description(d);
        const auto a = validate_description(d);
        const auto b = validate_description(d);
        EXPECT_EQ(a, b);
        EXPECT_EQ(serialize_description(d), before);
        EXPECT_TRUE(std::is_sorted(a.begin(), a.end(), [](const Diagnostic& x, const Diagnostic& y) {
            return std::tie(x.code, x.location, x.message) < std::tie(y.code, y.location, y.message);
        }));
    }
}
