#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace vistruct {

inline std::string trim_copy(std::string_view s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline std::string to_lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

/// Split on whitespace runs; tokens keep their punctuation.
inline std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string token;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!token.empty()) {
                out.push_back(std::move(token));
                token.clear();
            }
        } else {
            token.push_back(static_cast<char>(c));
        }
    }
    if (!token.empty()) out.push_back(std::move(token));
    return out;
}

/// Lowercase tokens split on whitespace and ASCII punctuation; bytes outside
/// ASCII stay inside tokens.
inline std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            out.push_back(std::move(token));
            token.clear();
        }
    };
    for (unsigned char c : s) {
        if (c < 0x80 && (std::isspace(c) || std::ispunct(c)))
            flush();
        else
            token.push_back(static_cast<char>(std::tolower(c)));
    }
    flush();
    return out;
}

}  // namespace vistruct
