#pragma once

// Small text helpers shared by the CSV/JSON writers. Numbers are written in
// shortest round-trip form so repeated runs produce byte-identical files.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include "heuler/error.hpp"

namespace heuler::io {

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
    std::string t(text);
    if (t == "inf" || t == "+inf" || t == "infinity") return HUGE_VAL;
    if (t == "-inf" || t == "-infinity") return -HUGE_VAL;
    if (t == "nan") return std::nan("");
    double out = 0.0;
    auto first = t.data();
    if (!t.empty() && t.front() == '+') ++first;
    auto res = std::from_chars(first, t.data() + t.size(), out);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw Error(ErrorKind::IoError, "not a number: '" + t + "'");
    }
    return out;
}

inline std::ofstream open_for_write(const std::filesystem::path& path, bool binary = false) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    return out;
}

inline std::ifstream open_for_read(const std::filesystem::path& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return in;
}

}  // namespace heuler::io
