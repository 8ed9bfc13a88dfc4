#pragma once

// Shared domain types: cards, decks, judge tokens and round records.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "guessarena/error.hpp"

namespace guessarena {

/// Lowercases (simple Unicode case folding), trims, and collapses internal
/// whitespace runs to a single space. Empty input yields an empty string.
std::string normalize_card(std::string_view text);

/// Whole-word search of `needle` in `haystack`; both are expected normalized.
/// Returns the byte offsets of every occurrence bounded by non-word characters.
std::vector<std::size_t> find_whole_word(std::string_view haystack, std::string_view needle);

std::string trim(std::string_view text);

/// Stable 64-bit FNV-1a digest rendered as 16 hex characters.
std::string fnv1a_hex(std::string_view bytes);
std::uint64_t fnv1a(std::string_view bytes) noexcept;

struct DomainSpec {
    std::string name;
    std::string description;
    std::vector<std::string> seed_terms;

    /// Throws InvalidArgument on an empty name, DuplicateCard on duplicate seed terms.
    void validate() const;
};

class Card {
public:
    explicit Card(std::string text, std::optional<int> cluster_id = std::nullopt);

    const std::string& text() const noexcept { return text_; }
    const std::string& key() const noexcept { return key_; }
    std::optional<int> cluster_id() const noexcept { return cluster_id_; }

    friend bool operator==(const Card& a, const Card& b) noexcept { return a.key_ == b.key_; }

private:
    std::string text_;
    std::string key_;
    std::optional<int> cluster_id_;
};

struct KeywordCluster {
    int id = 0;
    std::vector<std::string> keywords;
};

struct Thresholds {
    double lower = 0.35;
    double upper = 0.9;
};

class Deck {
public:
    Deck(DomainSpec domain, std::vector<Card> cards, std::vector<KeywordCluster> clusters,
         std::string encoder_id, Thresholds thresholds, std::string created_at);

    const DomainSpec& domain() const noexcept { return domain_; }
    const std::vector<Card>& cards() const noexcept { return cards_; }
    const std::vector<KeywordCluster>& clusters() const noexcept { return clusters_; }
    const std::string& encoder_id() const noexcept { return encoder_id_; }
    const Thresholds& thresholds() const noexcept { return thresholds_; }
    const std::string& created_at() const noexcept { return created_at_; }
    std::size_t size() const noexcept { return cards_.size(); }

    std::optional<std::size_t> index_of(const Card& card) const;
    bool contains(const Card& card) const { return index_of(card).has_value(); }

    /// Card texts in deck order.
    std::vector<std::string> card_texts() const;

    /// Digest over domain name and normalized card list; stable across runs.
    const std::string& digest() const noexcept { return digest_; }

private:
    DomainSpec domain_;
    std::vector<Card> cards_;
    std::vector<KeywordCluster> clusters_;
    std::string encoder_id_;
    Thresholds thresholds_;
    std::string created_at_;
    std::string digest_;
};

enum class JudgeToken { Yes, No, Invalid, End };

std::string_view to_string(JudgeToken token) noexcept;
/// Accepts "Yes", "[Yes]" and case variants. Throws MalformedInput otherwise.
JudgeToken judge_token_from_string(std::string_view text);

struct Turn {
    int index = 1;
    std::string player_text;
    JudgeToken judge_token = JudgeToken::Invalid;
    bool is_final_guess = false;
    std::int64_t wall_time_ms = 0;
    // Full player reply when it differs from the extracted line.
    std::optional<std::string> player_raw;
};

enum class Termination { FinalGuess, MaxTurns, ProtocolError };

std::string_view to_string(Termination t) noexcept;
Termination termination_from_string(std::string_view text);

struct RoundResult {
    std::string round_id;
    Card target_card{"?"};
    std::vector<Turn> transcript;
    std::optional<std::string> final_guess;
    bool correct = false;
    int t_model = 1;
    Termination terminated_by = Termination::ProtocolError;
    std::optional<std::string> error_detail;
    std::string started_at;
    std::string ended_at;
};

/// ISO-8601 UTC with millisecond precision, e.g. 2025-01-01T00:00:00.000Z.
std::string format_timestamp(std::chrono::system_clock::time_point tp);

}  // namespace guessarena
