#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "error.hpp"
#include "payload.hpp"
#include "sim_time.hpp"

namespace tlmforge {

/// One activation of one instance.
struct TraceRecord {
    std::string instance;
    std::uint64_t activation = 0;
    SimTime start;
    SimTime end;
    std::uint64_t txn_id = 0;
    ResponseStatus status = ResponseStatus::Ok;

    bool operator==(const TraceRecord&) const = default;
};

/// Canonical row order: start time, then instance name, then activation.
inline bool trace_order(const TraceRecord& a, const TraceRecord& b) {
    return std::tie(a.start, a.instance, a.activation) < std::tie(b.start, b.instance, b.activation);
}

inline void sort_trace(std::vector<TraceRecord>& records) { std::stable_sort(records.begin(), records.end(), trace_order); }

/// Collects records during a run and numbers activations per instance.
class TraceSink {
public:
    void record(const std::string& instance, SimTime start, SimTime end, std::uint64_t txn_id, ResponseStatus status) {
        auto& next = next_activation_[instance];
        records_.push_back({instance, next++, start, end, txn_id, status});
    }

    const std::vector<TraceRecord>& records() const { return records_; }

    std::vector<TraceRecord> sorted() const {
        auto out = records_;
        sort_trace(out);
        return out;
    }

private:
    std::vector<TraceRecord> records_;
    std::map<std::string, std::uint64_t> next_activation_;
};

inline constexpr std::string_view kTraceHeader = "# tlm-forge-trace v1";
inline constexpr std::string_view kTraceColumns = "instance,activation,start_ps,end_ps,txn_id,status";

class TraceSyntaxError : public Error {
public:
    TraceSyntaxError(std::size_t line, const std::string& message)
        : Error("E-TRACE-SYNTAX", "line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::optional<std::vector<std::string>> split_csv(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    std::size_t i = 0;
    bool quoted_field = false;
    while (true) {
        if (i < line.size() && line[i] == '"' && cur.empty() && !quoted_field) {
            quoted_field = true;
            ++i;
            bool closed = false;
            while (i < line.size()) {
                if (line[i] == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        cur += '"';
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                cur += line[i++];
            }
            if (!closed) return std::nullopt;
            if (i < line.size() && line[i] != ',') return std::nullopt;
        }
        if (i >= line.size()) {
            fields.push_back(std::move(cur));
            return fields;
        }
        if (line[i] == ',') {
            fields.push_back(std::exchange(cur, {}));
            quoted_field = false;
            ++i;
            continue;
        }
        if (quoted_field || line[i] == '"') return std::nullopt;
        cur += line[i++];
    }
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
    if (s.empty() || (s.size() > 1 && s[0] == '0')) return std::nullopt;
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace detail

/// Serializes records in canonical order. Output is byte-deterministic.
inline std::string write_trace(std::vector<TraceRecord> records) {
    sort_trace(records);
    std::string out;
    out += kTraceHeader;
    out += '\n';
    out += kTraceColumns;
    out += '\n';
    for (const auto& r : records) {
        out += detail::csv_field(r.instance);
        out += ',' + std::to_string(r.activation);
        out += ',' + std::to_string(r.start.ps());
        out += ',' + std::to_string(r.end.ps());
        out += ',' + std::to_string(r.txn_id);
        out += ',';
        out += to_string(r.status);
        out += '\n';
    }
    return out;
}

/// Parses a trace log, keeping row order. Throws TraceSyntaxError naming the
/// first offending line.
inline std::vector<TraceRecord> parse_trace(std::string_view text) {
    std::vector<TraceRecord> records;
    std::set<std::pair<std::string, std::uint64_t>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            throw TraceSyntaxError(line_no + 1, "missing final newline");
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != kTraceHeader) throw TraceSyntaxError(line_no, "expected header '" + std::string(kTraceHeader) + "'");
            continue;
        }
        if (line_no == 2) {
            if (line != kTraceColumns) throw TraceSyntaxError(line_no, "expected column line");
            continue;
        }
        auto fields = detail::split_csv(line);
        if (!fields || fields->size() != 6) throw TraceSyntaxError(line_no, "expected 6 fields");
        auto& f = *fields;
        if (f[0].empty()) throw TraceSyntaxError(line_no, "empty instance name");
        auto activation = detail::parse_u64(f[1]);
        auto start = detail::parse_u64(f[2]);
        auto end = detail::parse_u64(f[3]);
        auto txn = detail::parse_u64(f[4]);
        auto status = status_from_string(f[5]);
        if (!activation || !start || !end || !txn) throw TraceSyntaxError(line_no, "malformed number");
        if (!status || *status == ResponseStatus::Incomplete)
            throw TraceSyntaxError(line_no, "unknown or non-terminal status '" + f[5] + "'");
        if (*end < *start) throw TraceSyntaxError(line_no, "end before start");
        if (!seen.emplace(f[0], *activation).second)
            throw TraceSyntaxError(line_no, "duplicate activation " + f[1] + " of " + f[0]);
        records.push_back({f[0], *activation, SimTime(*start), SimTime(*end), *txn, *status});
    }
    if (line_no < 2) throw TraceSyntaxError(line_no + 1, "missing header");
    return records;
}

/// Latest end minus earliest start over the instance's activations.
inline SimTime end_to_end_latency(const std::vector<TraceRecord>& trace, std::string_view instance) {
    std::optional<SimTime> first, last;
    for (const auto& r : trace) {
        if (r.instance != instance) continue;
        first = first ? std::min(*first, r.start) : r.start;
        last = last ? std::max(*last, r.end) : r.end;
    }
    if (!first) throw Error("E-NO-INSTANCE", "instance '" + std::string(instance) + "' not in trace");
    return *last - *first;
}

/// Deadline on an instance's final activation end time.
struct TimingConstraint {
    std::string instance;
    SimTime max_end;

    bool operator==(const TimingConstraint&) const = default;
};

struct ConstraintResult {
    TimingConstraint constraint;
    std::optional<SimTime> measured;
    bool pass = false;
    std::string reason;
};

struct ConstraintReport {
    std::vector<ConstraintResult> results;

    bool pass() const {
        return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
    }
};

inline ConstraintReport check_constraints(const std::vector<TraceRecord>& trace,
                                          const std::vector<TimingConstraint>& constraints) {
    ConstraintReport report;
    for (const auto& c : constraints) {
        ConstraintResult res{c, std::nullopt, false, {}};
        for (const auto& r : trace)
            if (r.instance == c.instance) res.measured = res.measured ? std::max(*res.measured, r.end) : r.end;
        if (!res.measured) {
            res.reason = "E-NO-INSTANCE";
        } else {
            res.pass = *res.measured <= c.max_end;
            if (!res.pass) res.reason = "deadline exceeded";
        }
        report.results.push_back(std::move(res));
    }
    return report;
}

inline std::string format_report(const ConstraintReport& report) {
    std::ostringstream os;
    for (const auto& r : report.results) {
        os << (r.pass ? "PASS " : "FAIL ") << r.constraint.instance << " end <= " << format_ns(r.constraint.max_end)
           << " ns: ";
        if (r.measured)
            os << "measured " << format_ns(*r.measured) << " ns (" << r.measured->ps() << " ps)";
        else
            os << "not measured";
        if (!r.reason.empty()) os << " [" << r.reason << "]";
        os << '\n';
    }
    os << "verdict: " << (report.pass() ? "PASS" : "FAIL") << '\n';
    return os.str();
}

} // namespace tlmforge
