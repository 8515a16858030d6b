#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <unistd.h>

#include "tlmforge/tlmforge.hpp"

namespace fixture {

inline std::filesystem::path source_dir() { return TLMFORGE_SOURCE_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::filesystem::path abs_path() { return source_dir() / "models" / "abs.json"; }

inline std::string abs_text() { return read_file(abs_path()); }

inline tlmforge::SystemDescription abs() {
    auto r = tlmforge::parse_description(abs_text());
    if (!r.ok()) throw std::runtime_error("abs.json does not parse: " + r.diagnostics.front().message);
    return r.description;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("tlmforge-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace fixture
