#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>

#include "cwlab/errors.hpp"

namespace cwlab {

// Bit-strings are std::strings of '0'/'1', most significant bit first.
// The empty string is a valid label. Lexicographic order on fixed-width
// strings equals numeric order, which is the order used everywhere.
using Bits = std::string;

inline bool bits_valid(std::string_view b) {
    return std::all_of(b.begin(), b.end(),
                       [](char c) { return c == '0' || c == '1'; });
}

inline Bits bits_from_value(std::uint64_t value, int length) {
    if (length < 0 || length > 63)
        throw domain_error("bits_from_value: length out of range");
    if (length < 64 && value >> length)
        throw domain_error("bits_from_value: value does not fit");
    Bits b(static_cast<std::size_t>(length), '0');
    for (int i = 0; i < length; ++i)
        if (value >> (length - 1 - i) & 1) b[static_cast<std::size_t>(i)] = '1';
    return b;
}

// Numeric value of a bit-string (phi in the rank/select operations).
inline std::uint64_t bits_value(std::string_view b) {
    if (b.size() > 63) throw domain_error("bits_value: string too long");
    std::uint64_t v = 0;
    for (char c : b) v = v << 1 | static_cast<std::uint64_t>(c == '1');
    return v;
}

inline bool bits_starts_with(std::string_view b, std::string_view prefix) {
    return b.size() >= prefix.size() && b.substr(0, prefix.size()) == prefix;
}

// Length of the longest common prefix.
inline int bits_lcp(std::string_view a, std::string_view b) {
    const std::size_t n = std::min(a.size(), b.size());
    std::size_t i = 0;
    while (i < n && a[i] == b[i]) ++i;
    return static_cast<int>(i);
}

}  // namespace cwlab
