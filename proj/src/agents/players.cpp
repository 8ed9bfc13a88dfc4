#include <algorithm>
#include <cstdlib>
#include <regex>

#include "guessarena/agents.hpp"
#include "guessarena/random.hpp"

namespace guessarena::agents {

namespace {

bool contains_ci(std::string_view haystack, std::string_view needle) {
    return normalize_card(haystack).find(normalize_card(needle)) != std::string::npos;
}

std::optional<int> parse_attribute_question(std::string_view line) {
    static const std::regex question(R"(^\s*attribute\s+(\d+)\s*\?\s*$)", std::regex::icase);
    std::string s(line);
    std::smatch m;
    if (!std::regex_match(s, m, question)) return std::nullopt;
    return std::atoi(m[1].str().c_str());
}

std::vector<Message> with_history(const PromptParts& prompt, std::span<const Exchange> history,
                                  std::optional<std::string_view> pending) {
    std::string user = prompt.instruction;
    auto dialog = format_dialog_history(history, pending);
    if (!dialog.empty()) user += "\n\n" + dialog;
    return {{Role::System, prompt.system}, {Role::User, std::move(user)}};
}

}  // namespace

LlmPlayer::LlmPlayer(std::shared_ptr<ChatClient> chat, PlayerContext ctx)
    : chat_(std::move(chat)), prompt_(player_prompt_parts(ctx)) {}

std::string LlmPlayer::next_move(std::span<const Exchange> history) {
    auto messages = with_history(prompt_, history, std::nullopt);
    return chat_->chat(messages);
}

LlmJudge::LlmJudge(std::shared_ptr<ChatClient> chat, const Deck& deck, const Card& target)
    : chat_(std::move(chat)), prompt_(judge_prompt_parts(deck, target)) {}

std::string LlmJudge::respond(std::span<const Exchange> history, std::string_view player_line) {
    auto messages = with_history(prompt_, history, player_line);
    return chat_->chat(messages);
}

std::map<int, bool> parse_attribute_card(std::string_view text) {
    static const std::regex item(R"(^\s*attr(\d+)\s*:\s*(yes|no)\s*$)", std::regex::icase);
    std::map<int, bool> attrs;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto bar = text.find('|', start);
        std::string part(text.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start));
        std::smatch m;
        if (!std::regex_match(part, m, item)) return {};
        attrs[std::atoi(m[1].str().c_str())] = normalize_card(m[2].str()) == "yes";
        if (bar == std::string_view::npos) break;
        start = bar + 1;
    }
    return attrs;
}

std::string make_attribute_card(const std::vector<bool>& bits) {
    std::string out;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (i) out += '|';
        out += "attr" + std::to_string(i) + (bits[i] ? ":yes" : ":no");
    }
    return out;
}

RuleJudge::RuleJudge(const Deck& deck, const Card& target, std::string sentinel)
    : sentinel_(std::move(sentinel)) {
    auto idx = deck.index_of(target);
    if (!idx) throw Error(ErrorCode::TargetNotInDeck, "target card not in deck: " + target.text());
    target_attrs_ = parse_attribute_card(deck.cards()[*idx].text());
}

std::string RuleJudge::respond(std::span<const Exchange>, std::string_view player_line) {
    if (contains_ci(player_line, sentinel_)) return "[End]";
    auto attr = parse_attribute_question(player_line);
    if (!attr) return "[Invalid]";
    auto it = target_attrs_.find(*attr);
    if (it == target_attrs_.end()) return "[Invalid]";
    return it->second ? "[Yes]" : "[No]";
}

HalvingOraclePlayer::HalvingOraclePlayer(const Deck& deck, std::string sentinel)
    : texts_(deck.card_texts()), sentinel_(std::move(sentinel)) {
    for (const auto& t : texts_) attrs_.push_back(parse_attribute_card(t));
}

std::string HalvingOraclePlayer::next_move(std::span<const Exchange> history) {
    std::vector<std::size_t> candidates(texts_.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
    for (const auto& ex : history) {
        auto attr = parse_attribute_question(ex.player_text);
        if (!attr || (ex.token != JudgeToken::Yes && ex.token != JudgeToken::No)) continue;
        bool want = ex.token == JudgeToken::Yes;
        std::erase_if(candidates, [&](std::size_t c) {
            auto it = attrs_[c].find(*attr);
            return it == attrs_[c].end() || it->second != want;
        });
    }
    if (candidates.empty()) return sentinel_ + " " + texts_.front();
    if (candidates.size() == 1) return sentinel_ + " " + texts_[candidates.front()];

    std::map<int, std::size_t> yes_counts;  // ordered: ties resolve to the lowest attribute index
    for (auto c : candidates)
        for (const auto& [k, v] : attrs_[c]) yes_counts[k] += v ? 1 : 0;
    std::optional<int> best;
    std::size_t best_imbalance = candidates.size();
    for (const auto& [k, yes] : yes_counts) {
        // Only attributes every candidate carries give a clean split.
        bool all_have = std::all_of(candidates.begin(), candidates.end(),
                                    [&](std::size_t c) { return attrs_[c].count(k) != 0; });
        if (!all_have || yes == 0 || yes == candidates.size()) continue;
        std::size_t no = candidates.size() - yes;
        std::size_t imbalance = yes > no ? yes - no : no - yes;
        if (imbalance < best_imbalance) {
            best_imbalance = imbalance;
            best = k;
        }
    }
    if (!best) return sentinel_ + " " + texts_[candidates.front()];
    return "attribute " + std::to_string(*best) + "?";
}

RandomGuesserPlayer::RandomGuesserPlayer(const Deck& deck, std::uint64_t seed, std::string sentinel)
    : order_(deck.card_texts()), sentinel_(std::move(sentinel)) {
    Rng rng(seed);
    rng.shuffle(order_);
}

std::string RandomGuesserPlayer::next_move(std::span<const Exchange> history) {
    return sentinel_ + " " + order_[history.size() % order_.size()];
}

std::string ScriptedPlayer::next_move(std::span<const Exchange>) {
    if (calls_ >= lines_.size()) {
        ++calls_;
        return {};
    }
    return lines_[calls_++];
}

std::string ScriptedJudge::respond(std::span<const Exchange>, std::string_view) {
    if (replies_.empty()) return {};
    std::size_t i = std::min(calls_, replies_.size() - 1);
    ++calls_;
    return replies_[i];
}

}  // namespace guessarena::agents
