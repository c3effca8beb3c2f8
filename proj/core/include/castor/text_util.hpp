#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace castor {

// True for the characters we treat as horizontal/vertical whitespace.
inline bool is_space_char(char c) {
    return c == ' ' || c == '\t' || c == '\n';
}

// Remove leading and trailing whitespace (space, tab, newline).
std::string_view strip(std::string_view text);

// Collapse every whitespace run to a canonical separator: a run with no
// newline becomes a single space, a run with exactly one newline becomes
// "\n", and a run with two or more newlines becomes "\n\n" (paragraph
// break).  Tabs count as spaces.
std::string collapse_whitespace(std::string_view text);

// ASCII-only lowercasing; bytes outside [A-Z] pass through untouched.
std::string to_lower_ascii(std::string_view text);

// Split on whitespace runs; no empty fields are produced.
std::vector<std::string> split_whitespace(std::string_view text);

// 64-bit FNV-1a.  Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace castor
