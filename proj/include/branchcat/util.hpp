#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace branchcat {

// Shortest decimal string that round-trips the exact double, via to_chars.
// Used for serialization and CSV bodies so that output is byte-stable and
// parse(format(x)) == x bitwise.
inline std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("fmt_double: to_chars failed");
    return std::string(buf, p);
}

inline double parse_double(const std::string& s) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    if (b < e && *b == '+') ++b;  // from_chars rejects a leading '+'
    double v = 0.0;
    auto [p, ec] = std::from_chars(b, e, v);
    while (p < e && (*p == ' ' || *p == '\t')) ++p;
    if (ec != std::errc{} || p != e)
        throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& s) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    while (p < e && (*p == ' ' || *p == '\t')) ++p;
    if (ec != std::errc{} || p != e)
        throw std::invalid_argument("not a non-negative integer: '" + s + "'");
    return v;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("linspace needs n >= 2 and hi > lo");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    g.back() = hi;
    return g;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
    if (!(lo > 0.0)) throw std::invalid_argument("logspace needs lo > 0");
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("logspace needs n >= 2 and hi > lo");
    std::vector<double> g(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i) g[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

// FNV-1a, 64 bit. Fingerprints canonical config text in output headers.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex16(std::uint64_t v) {
    static const char* d = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = d[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace branchcat
