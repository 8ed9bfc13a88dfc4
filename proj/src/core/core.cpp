#include "guessarena/core.hpp"

#include <algorithm>
#include <array>
#include <clocale>
#include <cstdio>
#include <ctime>
#include <cwctype>
#include <locale.h>
#include <unordered_set>

namespace guessarena {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DuplicateCard: return "DuplicateCard";
        case ErrorCode::MalformedInput: return "MalformedInput";
        case ErrorCode::UnreadableSource: return "UnreadableSource";
        case ErrorCode::EmptyAfterExtraction: return "EmptyAfterExtraction";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::TemplateFieldMissing: return "TemplateFieldMissing";
        case ErrorCode::EmptyExtraction: return "EmptyExtraction";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::DegenerateSimilarity: return "DegenerateSimilarity";
        case ErrorCode::TooFewKeywords: return "TooFewKeywords";
        case ErrorCode::ProviderError: return "ProviderError";
        case ErrorCode::TargetNotInDeck: return "TargetNotInDeck";
        case ErrorCode::MissingBackground: return "MissingBackground";
        case ErrorCode::MalformedBackground: return "MalformedBackground";
        case ErrorCode::UnparsableJudgeReply: return "UnparsableJudgeReply";
        case ErrorCode::ProtocolError: return "ProtocolError";
        case ErrorCode::EmptyResults: return "EmptyResults";
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::MissingGold: return "MissingGold";
        case ErrorCode::TooFewJudges: return "TooFewJudges";
    }
    return "Unknown";
}

std::string_view to_string(ProviderErrorKind kind) noexcept {
    switch (kind) {
        case ProviderErrorKind::Auth: return "auth";
        case ProviderErrorKind::RateLimitedExhausted: return "rate_limited_exhausted";
        case ProviderErrorKind::Transport: return "transport";
        case ProviderErrorKind::MalformedReply: return "malformed_reply";
    }
    return "unknown";
}

namespace {

bool is_space(unsigned char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Decodes one UTF-8 sequence; malformed bytes are passed through as-is.
char32_t decode_utf8(std::string_view s, std::size_t& i) noexcept {
    auto b0 = static_cast<unsigned char>(s[i]);
    int len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > s.size()) {
        ++i;
        return b0;
    }
    char32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
    for (int k = 1; k < len; ++k) {
        auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return b0;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

locale_t utf8_locale() {
    static locale_t loc = [] {
        locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
        if (l == nullptr) l = newlocale(LC_CTYPE_MASK, "en_US.UTF-8", static_cast<locale_t>(nullptr));
        return l;
    }();
    return loc;
}

char32_t fold_case(char32_t cp) {
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    if (locale_t loc = utf8_locale()) return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
    return cp;
}

bool is_word_byte(char c) noexcept {
    auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u == '_';
}

}  // namespace

std::string normalize_card(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_space(static_cast<unsigned char>(text[i]))) {
            pending_space = !out.empty();
            ++i;
            continue;
        }
        char32_t cp = decode_utf8(text, i);
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        encode_utf8(fold_case(cp), out);
    }
    return out;
}

std::vector<std::size_t> find_whole_word(std::string_view haystack, std::string_view needle) {
    std::vector<std::size_t> hits;
    if (needle.empty()) return hits;
    std::size_t pos = haystack.find(needle);
    while (pos != std::string_view::npos) {
        bool left_ok = pos == 0 || !is_word_byte(haystack[pos - 1]) || !is_word_byte(needle.front());
        std::size_t end = pos + needle.size();
        bool right_ok = end == haystack.size() || !is_word_byte(haystack[end]) || !is_word_byte(needle.back());
        if (left_ok && right_ok) hits.push_back(pos);
        pos = haystack.find(needle, pos + 1);
    }
    return hits;
}

std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    return std::string(buf.data(), 16);
}

void DomainSpec::validate() const {
    if (trim(name).empty()) throw Error(ErrorCode::InvalidArgument, "domain name is empty");
    std::unordered_set<std::string> seen;
    for (const auto& term : seed_terms) {
        if (!seen.insert(normalize_card(term)).second)
            throw Error(ErrorCode::DuplicateCard, "duplicate seed term: " + term);
    }
}

Card::Card(std::string text, std::optional<int> cluster_id)
    : text_(std::move(text)), key_(normalize_card(text_)), cluster_id_(cluster_id) {
    if (key_.empty()) throw Error(ErrorCode::InvalidArgument, "card text is empty");
    if (text_.find_first_of("\r\n") != std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "card text spans multiple lines: " + text_);
    if (text_.find(';') != std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "card text contains a semicolon: " + text_);
    if (cluster_id_ && *cluster_id_ < 0) throw Error(ErrorCode::InvalidArgument, "negative cluster id");
}

Deck::Deck(DomainSpec domain, std::vector<Card> cards, std::vector<KeywordCluster> clusters,
           std::string encoder_id, Thresholds thresholds, std::string created_at)
    : domain_(std::move(domain)),
      cards_(std::move(cards)),
      clusters_(std::move(clusters)),
      encoder_id_(std::move(encoder_id)),
      thresholds_(thresholds),
      created_at_(std::move(created_at)) {
    domain_.validate();
    if (cards_.size() < 2) throw Error(ErrorCode::InvalidArgument, "a deck needs at least 2 cards");
    std::unordered_set<std::string> seen;
    for (const auto& card : cards_) {
        if (!seen.insert(card.key()).second)
            throw Error(ErrorCode::DuplicateCard, "duplicate card: " + card.text());
        if (card.cluster_id()) {
            bool found = std::any_of(clusters_.begin(), clusters_.end(),
                                     [&](const KeywordCluster& c) { return c.id == *card.cluster_id(); });
            if (!found)
                throw Error(ErrorCode::InvalidArgument,
                            "card '" + card.text() + "' references unknown cluster " +
                                std::to_string(*card.cluster_id()));
        }
    }
    std::string material = normalize_card(domain_.name);
    for (const auto& card : cards_) {
        material.push_back('\n');
        material += card.key();
    }
    digest_ = fnv1a_hex(material);
}

std::optional<std::size_t> Deck::index_of(const Card& card) const {
    for (std::size_t i = 0; i < cards_.size(); ++i)
        if (cards_[i] == card) return i;
    return std::nullopt;
}

std::vector<std::string> Deck::card_texts() const {
    std::vector<std::string> out;
    out.reserve(cards_.size());
    for (const auto& c : cards_) out.push_back(c.text());
    return out;
}

std::string_view to_string(JudgeToken token) noexcept {
    switch (token) {
        case JudgeToken::Yes: return "Yes";
        case JudgeToken::No: return "No";
        case JudgeToken::Invalid: return "Invalid";
        case JudgeToken::End: return "End";
    }
    return "Invalid";
}

JudgeToken judge_token_from_string(std::string_view text) {
    std::string t = normalize_card(text);
    if (t.size() >= 2 && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
    if (t == "yes") return JudgeToken::Yes;
    if (t == "no") return JudgeToken::No;
    if (t == "invalid") return JudgeToken::Invalid;
    if (t == "end") return JudgeToken::End;
    throw Error(ErrorCode::MalformedInput, "not a judge token: " + std::string(text));
}

std::string_view to_string(Termination t) noexcept {
    switch (t) {
        case Termination::FinalGuess: return "final_guess";
        case Termination::MaxTurns: return "max_turns";
        case Termination::ProtocolError: return "protocol_error";
    }
    return "protocol_error";
}

Termination termination_from_string(std::string_view text) {
    if (text == "final_guess") return Termination::FinalGuess;
    if (text == "max_turns") return Termination::MaxTurns;
    if (text == "protocol_error") return Termination::ProtocolError;
    throw Error(ErrorCode::MalformedInput, "unknown termination cause: " + std::string(text));
}

std::string format_timestamp(std::chrono::system_clock::time_point tp) {
    using namespace std::chrono;
    auto ms = duration_cast<milliseconds>(tp.time_since_epoch()).count();
    std::time_t secs = static_cast<std::time_t>(ms / 1000);
    if (ms < 0 && ms % 1000 != 0) --secs;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    std::array<char, 96> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(((ms % 1000) + 1000) % 1000));
    return buf.data();
}

}  // namespace guessarena
