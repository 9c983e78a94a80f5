#pragma once

// Round-trip text formatting for doubles. Every file this library writes
// uses the shortest representation that parses back to the identical bits,
// which is what makes rerun-and-compare reproducibility checks byte-exact.

#include <charconv>
#include <stdexcept>
#include <string>
#include <system_error>

namespace vitalcast::detail {

inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) throw std::runtime_error("double formatting failed");
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw std::runtime_error("invalid number for " + what + ": '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& what) {
    long long v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw std::runtime_error("invalid integer for " + what + ": '" + s + "'");
    return v;
}

}  // namespace vitalcast::detail
