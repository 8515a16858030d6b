#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "sim_time.hpp"
#include "trace.hpp"

namespace tlmforge {

namespace detail {

/// Tick step in ps from the 1-2-5 series giving at most 10 intervals.
inline std::uint64_t nice_step(std::uint64_t span_ps) {
    std::uint64_t decade = 1;
    while (true) {
        for (std::uint64_t m : {1, 2, 5}) {
            std::uint64_t step = m * decade;
            if ((span_ps + step - 1) / step <= 10) return step;
        }
        decade *= 10;
    }
}

struct Axis {
    std::uint64_t max_ps;
    std::uint64_t step_ps;
};

inline Axis axis_for(const std::vector<TraceRecord>& trace) {
    std::uint64_t latest = 0;
    for (const auto& r : trace) latest = std::max(latest, r.end.ps());
    if (latest == 0) return {1000, 1000};
    std::uint64_t step = nice_step(latest);
    return {(latest + step - 1) / step * step, step};
}

/// Instances in order of first appearance in canonical trace order.
inline std::vector<std::string> lanes_of(const std::vector<TraceRecord>& sorted) {
    std::vector<std::string> lanes;
    for (const auto& r : sorted)
        if (std::find(lanes.begin(), lanes.end(), r.instance) == lanes.end()) lanes.push_back(r.instance);
    return lanes;
}

inline std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace detail

/// Timing diagram as SVG 1.1: one lane per instance, a green circle at each
/// activation start, a red circle at its end, a grey bar between, and a time
/// axis in ns.
inline std::string render_svg(std::vector<TraceRecord> trace) {
    sort_trace(trace);
    const auto lanes = detail::lanes_of(trace);
    const auto axis = detail::axis_for(trace);
    constexpr double left = 140, plot_w = 640, top = 30, lane_h = 32;
    const double plot_h = lane_h * static_cast<double>(std::max<std::size_t>(lanes.size(), 1));
    const double width = left + plot_w + 40, height = top + plot_h + 50;
    auto x_of = [&](SimTime t) {
        return left + plot_w * static_cast<double>(t.ps()) / static_cast<double>(axis.max_ps);
    };
    auto lane_y = [&](const std::string& inst) {
        auto i = std::find(lanes.begin(), lanes.end(), inst) - lanes.begin();
        return top + lane_h * (static_cast<double>(i) + 0.5);
    };

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + detail::fixed2(width) + "\" height=\"" +
         detail::fixed2(height) + "\" viewBox=\"0 0 " + detail::fixed2(width) + " " + detail::fixed2(height) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + detail::fixed2(width) + "\" height=\"" + detail::fixed2(height) +
         "\" fill=\"white\"/>\n";

    s += "<g class=\"lanes\" font-family=\"monospace\" font-size=\"12\">\n";
    for (const auto& lane : lanes) {
        const auto y = detail::fixed2(lane_y(lane));
        s += "<line x1=\"" + detail::fixed2(left) + "\" y1=\"" + y + "\" x2=\"" + detail::fixed2(left + plot_w) +
             "\" y2=\"" + y + "\" stroke=\"#e0e0e0\"/>\n";
        s += "<text x=\"" + detail::fixed2(left - 8) + "\" y=\"" + y +
             "\" text-anchor=\"end\" dominant-baseline=\"middle\">" + detail::xml_escape(lane) + "</text>\n";
    }
    s += "</g>\n";

    const double axis_y = top + plot_h + 10;
    s += "<g class=\"axis\" font-family=\"monospace\" font-size=\"11\">\n";
    s += "<line x1=\"" + detail::fixed2(left) + "\" y1=\"" + detail::fixed2(axis_y) + "\" x2=\"" +
         detail::fixed2(left + plot_w) + "\" y2=\"" + detail::fixed2(axis_y) + "\" stroke=\"black\"/>\n";
    for (std::uint64_t t = 0; t <= axis.max_ps; t += axis.step_ps) {
        const auto x = detail::fixed2(x_of(SimTime(t)));
        s += "<line x1=\"" + x + "\" y1=\"" + detail::fixed2(axis_y) + "\" x2=\"" + x + "\" y2=\"" +
             detail::fixed2(axis_y + 5) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + x + "\" y=\"" + detail::fixed2(axis_y + 18) + "\" text-anchor=\"middle\">" +
             format_ns(SimTime(t)) + "</text>\n";
    }
    s += "<text x=\"" + detail::fixed2(left + plot_w / 2) + "\" y=\"" + detail::fixed2(axis_y + 36) +
         "\" text-anchor=\"middle\">time (ns)</text>\n";
    s += "</g>\n";

    s += "<g class=\"activations\">\n";
    for (const auto& r : trace) {
        const auto y = detail::fixed2(lane_y(r.instance));
        const auto x0 = detail::fixed2(x_of(r.start)), x1 = detail::fixed2(x_of(r.end));
        const std::string label = detail::xml_escape(r.instance) + " #" + std::to_string(r.activation);
        s += "<line class=\"bar\" x1=\"" + x0 + "\" y1=\"" + y + "\" x2=\"" + x1 + "\" y2=\"" + y +
             "\" stroke=\"grey\" stroke-width=\"4\"/>\n";
        s += "<circle class=\"start\" cx=\"" + x0 + "\" cy=\"" + y + "\" r=\"5\" fill=\"green\"><title>" + label +
             " start " + format_ns(r.start) + " ns</title></circle>\n";
        s += "<circle class=\"end\" cx=\"" + x1 + "\" cy=\"" + y + "\" r=\"5\" fill=\"red\"><title>" + label + " end " +
             format_ns(r.end) + " ns</title></circle>\n";
    }
    s += "</g>\n";
    s += "</svg>\n";
    return s;
}

struct TextChartOptions {
    std::size_t width = 64;
    bool color = false;
};

/// Terminal timing chart: 'o' marks a start, 'x' an end, '-' the span.
inline std::string render_text(std::vector<TraceRecord> trace, const TextChartOptions& opt = {}) {
    sort_trace(trace);
    const auto lanes = detail::lanes_of(trace);
    const auto axis = detail::axis_for(trace);
    const std::size_t w = std::max<std::size_t>(opt.width, 8);
    std::size_t label_w = 4;
    for (const auto& l : lanes) label_w = std::max(label_w, l.size());
    auto col = [&](SimTime t) {
        return static_cast<std::size_t>((static_cast<unsigned __int128>(t.ps()) * w + axis.max_ps / 2) / axis.max_ps);
    };
    const std::string green = opt.color ? "\x1b[32m" : "", red = opt.color ? "\x1b[31m" : "",
                      reset = opt.color ? "\x1b[0m" : "";

    std::string out;
    for (const auto& lane : lanes) {
        std::string row(w + 1, ' ');
        std::vector<std::size_t> starts, ends;
        for (const auto& r : trace) {
            if (r.instance != lane) continue;
            auto a = col(r.start), b = col(r.end);
            for (auto c = a; c <= b; ++c)
                if (row[c] == ' ') row[c] = '-';
            starts.push_back(a);
            ends.push_back(b);
        }
        for (auto c : starts) row[c] = 'o';
        for (auto c : ends) row[c] = 'x';
        while (!row.empty() && row.back() == ' ') row.pop_back();
        out += lane + std::string(label_w - lane.size(), ' ') + " |";
        for (char c : row) {
            if (c == 'o') out += green + "o" + reset;
            else if (c == 'x') out += red + "x" + reset;
            else out += c;
        }
        out += '\n';
    }
    out += std::string(label_w, ' ') + " +" + std::string(w + 1, '-') + '\n';
    // Label every k-th tick so that neighbouring labels keep a gap.
    std::size_t label_max = 1;
    for (std::uint64_t t = 0; t <= axis.max_ps; t += axis.step_ps) label_max = std::max(label_max, format_ns(SimTime(t)).size());
    std::uint64_t stride = axis.step_ps;
    while (stride < axis.max_ps && col(SimTime(stride)) < label_max + 1) stride += axis.step_ps;
    std::string ticks(w + 12, ' ');
    for (std::uint64_t t = 0; t <= axis.max_ps; t += stride) {
        auto label = format_ns(SimTime(t));
        auto c = col(SimTime(t));
        for (std::size_t i = 0; i < label.size() && c + i < ticks.size(); ++i) ticks[c + i] = label[i];
    }
    while (!ticks.empty() && ticks.back() == ' ') ticks.pop_back();
    out += std::string(label_w + 2, ' ') + ticks + " ns\n";
    return out;
}

} // namespace tlmforge
