#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgt {

// Lowercased alphanumeric runs; shared by the embedding provider and ROUGE-L
// so both sides of the pipeline agree on what a "word" is.
inline std::vector<std::string> tokenize_alnum(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

// FNV-1a, 64-bit. Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Upper-bound token estimate used when no tokenizer is available.
inline std::size_t estimate_tokens(std::string_view text) {
    return (text.size() + 3) / 4;
}

}  // namespace kgt
