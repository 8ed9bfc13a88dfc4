#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "guessarena/agents.hpp"

namespace guessarena::agents {

namespace {

constexpr std::string_view kJudgeSystem =
    "You will participate as a judge in a card-guessing game. The game card deck is: {deck_of_cards}, and the "
    "card secretly chosen in this game is: {chosen_card}. Your duty is to objectively and fairly answer players' "
    "questions based on the characteristics and information of the selected card.";

constexpr std::string_view kJudgeInstruction =
    "## Judging Rules\n"
    "1. **Response Rules:** You can only use four standard responses: \"[Yes]\", \"[No]\", \"[Invalid]\", and "
    "\"[End]\". Do not provide any additional explanations. Maintain absolute objectivity in your responses and do "
    "not reveal any specific information about the chosen card.\n"
    "2. **Question Determination:** If a player's question is outside the scope of the card deck or obviously "
    "unreasonable, respond with \"[Invalid]\"; if the question is clear and within the answerable range, respond "
    "with \"[Yes]\" or \"[No]\" based on the actual characteristics of the chosen card.\n"
    "3. **Consistency Principle:** For substantially the same or highly similar questions, you must maintain "
    "consistent responses. Ensure that each question receives a fair and accurate judgment.\n"
    "4. **Game Termination:** When the player gives the final guess of the chosen card, you need to immediately "
    "respond with \"[End]\".\n"
    "\n"
    "## Judge's Responsibilities\n"
    "- Maintain absolute neutrality, do not provide any additional hints\n"
    "- Strictly follow the above rules to ensure the fairness of the game process";

constexpr std::string_view kPlayerSystem =
    "You will participate as a player in a card-guessing game. In front of you is a deck of cards: "
    "{deck_of_cards}, and your task is to guess the chosen card that has been secretly selected through a series "
    "of questions. Your questions can only be answered with \"[Yes]\" or \"[No]\".";

constexpr std::string_view kPlayerRules =
    "## Game Rules\n"
    "1. **Question Rules:** You may ask only one clear and concise question at a time, which must be answerable "
    "with \"[Yes]\" or \"[No]\". The question must not contain line breaks, nor can it directly ask about the "
    "card's specific identity. Do not request additional hints.\n"
    "2. **Scoring Mechanism:** The game score is inversely proportional to the number of questions asked. The "
    "fewer the questions, the higher the final score, assuming you correctly guess the chosen card. Successfully "
    "and quickly identifying the target card is key to achieving a high score.\n"
    "3. **Guessing Process:** After each question, wait for the judge's response, then use that information, "
    "along with previous questions, to ask the next question. When you make your final guess for the chosen card, "
    "the judge will immediately respond with \"[End]\", regardless of whether the guess is correct.\n"
    "4. **Invalid Behaviors:** Repeating the same question or guess is prohibited. Any questions or guesses "
    "unrelated to the game will be marked as \"[Invalid]\" by the judge.";

constexpr std::string_view kCotStrategy =
    "## Strategy Suggestions\n"
    "1. **Step-by-Step Reasoning**: Before each question, build a reasoning chain based on known information, "
    "clarify the current range of possible options, and choose the key question that best reduces uncertainty.\n"
    "2. **Prioritize Key Features**: Ask questions about features that can significantly differentiate most of the "
    "cards, quickly narrowing down the possible options.\n"
    "3. **Timely Guessing**: Once the final chosen card is determined, avoid excessive questioning to prevent it "
    "from negatively impacting your score.";

constexpr std::string_view kKnowledgeSection =
    "## Knowledge Background\n"
    "The following is domain-specific knowledge related to these cards, which you can use as a reference to guide "
    "your guesses as a player:\n"
    "{knowledge_background}";

constexpr std::string_view kPlayerKickoff = "Please begin by asking your first question.";

constexpr std::string_view kBackgroundSystem =
    "You are an expert in the field of {name}, which primarily focuses on {description}. Your task is to generate "
    "a concise and informative domain knowledge background based on the following cards: {deck_of_cards}";

constexpr std::string_view kBackgroundInstruction =
    "When generating the domain knowledge background, please adhere to the following principles:\n"
    "1. **Relevance to Cards**: Ensure the background content is directly related to the cards' theme, describing "
    "the domain's key characteristics, typical classifications, and common attributes.\n"
    "2. **Logical Reasoning Support**: Provide logical clues that can be used to differentiate between cards, but "
    "avoid giving overly specific or direct information.\n"
    "3. **Diversity and Representativeness**: Highlight the domain's diversity by mentioning different subfields, "
    "classifications, or representative concepts. Ensure the knowledge background covers all the cards' content "
    "without omitting any part.\n"
    "4. **Neutrality and Accuracy**: Maintain a neutral and objective tone. The information provided should guide "
    "reasoning without favoring any specific card.\n"
    "5. **Clarity and Conciseness**: The knowledge background should be concise (250-300 words) while ensuring "
    "clear language, rigorous logic, and accurate information that is easy to understand.\n"
    "\n"
    "Do not include any additional explanations or extraneous text. Output the domain knowledge background strictly "
    "in the following JSON format:\n"
    "{\n"
    "    \"knowledge_background\": \"Generated domain knowledge background\"\n"
    "}";

// Single-pass substitution of {name} placeholders; substituted text is never rescanned.
std::string substitute(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string>>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                std::string_view name = tmpl.substr(i + 1, close - i - 1);
                auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}  // namespace

std::string_view to_string(PromptRegime r) noexcept {
    switch (r) {
        case PromptRegime::Basic: return "basic";
        case PromptRegime::Cot: return "cot";
        case PromptRegime::KnowledgeDriven: return "knowledge_driven";
    }
    return "basic";
}

PromptRegime regime_from_string(std::string_view s) {
    if (s == "basic") return PromptRegime::Basic;
    if (s == "cot") return PromptRegime::Cot;
    if (s == "knowledge_driven" || s == "knowledge-driven" || s == "knowledge") return PromptRegime::KnowledgeDriven;
    throw Error(ErrorCode::InvalidArgument, "unknown prompt regime: " + std::string(s));
}

std::size_t count_words(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::size_t n = 0;
    std::string w;
    while (in >> w) ++n;
    return n;
}

void PlayerContext::validate() const {
    if (deck_listing.empty()) throw Error(ErrorCode::InvalidArgument, "player context has an empty deck listing");
    if (regime != PromptRegime::KnowledgeDriven) return;
    if (!knowledge_background || trim(*knowledge_background).empty())
        throw Error(ErrorCode::MissingBackground, "knowledge_driven regime requires a knowledge background");
    auto words = count_words(*knowledge_background);
    if (words < kMinBackgroundWords || words > kMaxBackgroundWords)
        throw Error(ErrorCode::MalformedBackground, "knowledge background has " + std::to_string(words) +
                                                        " words; expected " + std::to_string(kMinBackgroundWords) +
                                                        "-" + std::to_string(kMaxBackgroundWords));
}

PromptParts judge_prompt_parts(const Deck& deck, const Card& target) {
    auto idx = deck.index_of(target);
    if (!idx) throw Error(ErrorCode::TargetNotInDeck, "target card not in deck: " + target.text());
    return {substitute(kJudgeSystem, {{"deck_of_cards", join(deck.card_texts(), ", ")},
                                      {"chosen_card", deck.cards()[*idx].text()}}),
            std::string(kJudgeInstruction)};
}

PromptParts player_prompt_parts(const PlayerContext& ctx) {
    ctx.validate();
    PromptParts parts;
    parts.system = substitute(kPlayerSystem, {{"deck_of_cards", join(ctx.deck_listing, ", ")}});
    std::string instruction(kPlayerRules);
    switch (ctx.regime) {
        case PromptRegime::Basic: break;
        case PromptRegime::Cot:
            instruction += "\n\n";
            instruction += kCotStrategy;
            break;
        case PromptRegime::KnowledgeDriven:
            instruction += "\n";
            instruction += substitute(kKnowledgeSection, {{"knowledge_background", *ctx.knowledge_background}});
            break;
    }
    instruction += "\n\n";
    instruction += kPlayerKickoff;
    parts.instruction = std::move(instruction);
    return parts;
}

PromptParts background_prompt_parts(const Deck& deck) {
    const auto& d = deck.domain();
    if (trim(d.name).empty() || trim(d.description).empty())
        throw Error(ErrorCode::TemplateFieldMissing, "background prompt needs domain name and description");
    return {substitute(kBackgroundSystem, {{"name", d.name},
                                           {"description", d.description},
                                           {"deck_of_cards", join(deck.card_texts(), ", ")}}),
            std::string(kBackgroundInstruction)};
}

std::string render_judge_prompt(const Deck& deck, const Card& target) { return judge_prompt_parts(deck, target).joined(); }
std::string render_player_prompt(const PlayerContext& ctx) { return player_prompt_parts(ctx).joined(); }
std::string render_background_prompt(const Deck& deck) { return background_prompt_parts(deck).joined(); }

std::string parse_background_reply(std::string_view reply) {
    std::string body = trim(reply);
    if (body.starts_with("```")) {
        auto first_nl = body.find('\n');
        auto last_fence = body.rfind("```");
        if (first_nl != std::string::npos && last_fence != std::string::npos && last_fence > first_nl)
            body = trim(std::string_view(body).substr(first_nl + 1, last_fence - first_nl - 1));
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::MalformedBackground, "background reply is not JSON");
    }
    if (!j.is_object() || j.size() != 1 || !j.contains("knowledge_background") ||
        !j["knowledge_background"].is_string())
        throw Error(ErrorCode::MalformedBackground,
                    "background reply must be a single-key object {\"knowledge_background\": \"...\"}");
    auto text = j["knowledge_background"].get<std::string>();
    if (trim(text).empty()) throw Error(ErrorCode::MalformedBackground, "knowledge background is empty");
    if (count_words(text) > kMaxBackgroundWords)
        throw Error(ErrorCode::MalformedBackground, "knowledge background exceeds " +
                                                        std::to_string(kMaxBackgroundWords) + " words");
    return text;
}

std::string generate_knowledge_background(const Deck& deck, ChatClient& chat) {
    auto parts = background_prompt_parts(deck);
    std::vector<Message> messages{{Role::System, parts.system}, {Role::User, parts.instruction}};
    return parse_background_reply(chat.chat(messages));
}

JudgeToken parse_judge_reply(std::string_view raw) {
    static const std::regex bracketed(R"(\[\s*(yes|no|invalid|end)\s*\])", std::regex::icase);
    std::set<JudgeToken> found;
    std::string text(raw);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), bracketed); it != std::sregex_iterator(); ++it)
        found.insert(judge_token_from_string((*it)[1].str()));
    if (found.size() == 1) return *found.begin();
    if (found.empty()) {
        std::string bare = normalize_card(text);
        if (bare == "yes" || bare == "no" || bare == "invalid" || bare == "end") return judge_token_from_string(bare);
    }
    throw Error(ErrorCode::UnparsableJudgeReply, "judge reply is not exactly one token: " + text.substr(0, 200));
}

std::string format_dialog_history(std::span<const Exchange> history, std::optional<std::string_view> pending) {
    if (history.empty() && !pending) return {};
    std::string out = "## Dialog History";
    for (const auto& ex : history) {
        out += "\nPlayer: " + ex.player_text;
        out += "\nJudge: [" + std::string(to_string(ex.token)) + "]";
    }
    if (pending) out += "\nPlayer: " + std::string(*pending);
    return out;
}

}  // namespace guessarena::agents
