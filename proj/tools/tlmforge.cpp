// tlmforge command-line front end.
//
// Exit codes: 0 success/PASS, 1 validation or constraint FAIL, 2 usage or
// path error, 3 runtime error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>

#include "tlmforge/tlmforge.hpp"

namespace fs = std::filesystem;
using namespace tlmforge;

namespace {

enum Exit { kOk = 0, kFail = 1, kUsage = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + path.string() + "'");
    out << text;
    if (!out.flush()) throw UsageError("cannot write '" + path.string() + "'");
}

/// Parses and validates; prints diagnostics and returns nullopt on failure.
std::optional<SystemDescription> load_description(const std::string& path) {
    const std::string text = read_file(path);
    auto parsed = parse_description(text);
    auto diags = parsed.ok() ? validate_description(parsed.description) : parsed.diagnostics;
    if (diags.empty()) return std::move(parsed.description);
    locate(diags, text);
    for (const auto& d : diags) std::cout << format_diagnostic(d, path) << '\n';
    std::cout << diags.size() << " diagnostic(s)\n";
    return std::nullopt;
}

int cmd_validate(const std::string& path) {
    auto d = load_description(path);
    if (!d) return kFail;
    std::cout << "OK " << path << ": " << d->cpus.size() << " CPU(s), " << d->buses.size() << " bus(es), "
              << d->modules.size() << " module(s), " << d->instances.size() << " instance(s), " << d->bindings.size()
              << " binding(s)\n";
    return kOk;
}

int cmd_run(const std::string& path, const std::string& trace_out, const std::string& quantum,
            std::optional<std::uint64_t> event_limit) {
    RunOptions opts;
    if (!quantum.empty()) {
        opts.global_quantum = parse_duration(quantum);
        if (!opts.global_quantum) throw UsageError("--quantum: not a duration: '" + quantum + "'");
    }
    if (event_limit) {
        if (*event_limit == 0) throw UsageError("--event-limit must be positive");
        opts.event_limit = event_limit;
    }
    auto d = load_description(path);
    if (!d) return kFail;
    std::unique_ptr<Model> model;
    try {
        model = elaborate(*d, opts);
    } catch (const Error& e) {
        std::cout << path << ": " << e.what() << '\n';
        return kFail;
    }
    const SimTime end = model->run();
    const auto trace = model->trace();
    const std::string csv = write_trace(trace);

    std::ostream& info = trace_out.empty() ? std::cerr : std::cout;
    if (trace_out.empty())
        std::cout << csv;
    else
        write_file(trace_out, csv);
    info << "simulated " << trace.size() << " activation(s); final time " << format_ns(end) << " ns (" << end.ps()
         << " ps)\n";
    if (d->constraints.empty()) return kOk;
    const auto report = check_constraints(trace, d->constraints);
    info << format_report(report);
    return report.pass() ? kOk : kFail;
}

int cmd_render(const std::string& path, const std::string& svg_out, bool text) {
    const auto trace = parse_trace(read_file(path));
    if (!svg_out.empty()) {
        write_file(svg_out, render_svg(trace));
        if (!text) return kOk;
    }
    TextChartOptions opt;
    const char* env = std::getenv("TLMFORGE_COLOR");
    opt.color = isatty(fileno(stdout)) != 0 && !(env && std::string(env) == "0");
    std::cout << render_text(trace, opt);
    return kOk;
}

int cmd_check(const std::string& desc_path, const std::string& trace_path) {
    auto d = load_description(desc_path);
    if (!d) return kFail;
    const auto trace = parse_trace(read_file(trace_path));
    const auto report = check_constraints(trace, d->constraints);
    std::cout << format_report(report);
    return report.pass() ? kOk : kFail;
}

int cmd_export(const std::string& path, const std::string& out_dir) {
    auto d = load_description(path);
    if (!d) return kFail;
    SourceBundle bundle;
    try {
        bundle = export_tlm(*d);
    } catch (const Error& e) {
        std::cout << path << ": " << e.what() << '\n';
        return kFail;
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw UsageError("cannot create directory '" + out_dir + "'");
    for (const auto& f : bundle) {
        write_file(fs::path(out_dir) / f.name, f.text);
        std::cout << (fs::path(out_dir) / f.name).string() << '\n';
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tlmforge: transaction-level virtual-platform simulator"};
    app.require_subcommand(1);

    std::string desc, trace, svg, out_dir, quantum, trace_out;
    bool text = false;
    std::optional<std::uint64_t> event_limit;

    auto* validate = app.add_subcommand("validate", "Parse and validate a system description");
    validate->add_option("desc", desc, "System description (JSON)")->required();

    auto* run = app.add_subcommand("run", "Simulate a description and write its trace");
    run->add_option("desc", desc, "System description (JSON)")->required();
    run->add_option("--trace", trace_out, "Trace CSV output (default: stdout)");
    run->add_option("--quantum", quantum, "Global quantum, e.g. 1us (default: description, else 0)");
    run->add_option("--event-limit", event_limit, "Abort after this many kernel events");

    auto* render = app.add_subcommand("render", "Draw a timing diagram from a trace");
    render->add_option("trace", trace, "Trace CSV")->required();
    render->add_option("--svg", svg, "Write an SVG diagram to this file");
    render->add_flag("--text", text, "Print a text chart (default when --svg is absent)");

    auto* check = app.add_subcommand("check", "Check a trace against a description's constraints");
    check->add_option("desc", desc, "System description (JSON)")->required();
    check->add_option("trace", trace, "Trace CSV")->required();

    auto* exp = app.add_subcommand("export", "Write TLM-2.0 SystemC sources");
    exp->add_option("desc", desc, "System description (JSON)")->required();
    exp->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (*validate) return cmd_validate(desc);
        if (*run) return cmd_run(desc, trace_out, quantum, event_limit);
        if (*render) return cmd_render(trace, svg, text);
        if (*check) return cmd_check(desc, trace);
        if (*exp) return cmd_export(desc, out_dir);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const TraceSyntaxError& e) {
        std::cout << trace << ": " << e.what() << '\n';
        return kFail;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
