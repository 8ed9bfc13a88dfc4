#pragma once

// Shared fixtures for the test binaries.

#include <filesystem>
#include <string>
#include <vector>

#include "guessarena/core.hpp"

namespace guessarena::testing {

inline Deck make_deck(const std::vector<std::string>& texts, std::string name = "test") {
    std::vector<Card> cards;
    for (const auto& t : texts) cards.emplace_back(t);
    return Deck(DomainSpec{std::move(name), "test domain", {}}, std::move(cards), {}, "none", {}, "");
}

/// 2^bits cards, one per attribute assignment, "attr0:no|attr1:yes|..."
inline Deck attribute_deck(int bits) {
    std::vector<std::string> texts;
    for (int m = 0; m < (1 << bits); ++m) {
        std::string t;
        for (int b = 0; b < bits; ++b) {
            if (b) t += "|";
            t += "attr" + std::to_string(b) + ((m >> (bits - 1 - b)) & 1 ? ":yes" : ":no");
        }
        texts.push_back(t);
    }
    return make_deck(texts, "attributes");
}

inline std::vector<std::string> numbered(int n, const std::string& prefix = "card ") {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

inline std::filesystem::path fixtures() { return GUESSARENA_FIXTURES; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("guessarena-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace guessarena::testing
