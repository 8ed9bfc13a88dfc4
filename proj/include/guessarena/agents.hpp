#pragma once

// Provider adapters, prompt templates and simulated agents.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "guessarena/core.hpp"
#include "guessarena/http.hpp"

namespace guessarena::agents {

inline constexpr std::string_view kDefaultApiKeyEnv = "GUESSARENA_API_KEY";
inline constexpr std::string_view kDefaultSentinel = "FINAL GUESS:";

struct AgentEndpoint {
    std::string base_url;
    std::string model_id;
    std::string api_key_env{kDefaultApiKeyEnv};  // empty: no Authorization header
    double temperature = 0.0;
    int max_output_tokens = 512;
    int timeout_ms = 60000;
    int max_retries = 3;
    double requests_per_minute = 0.0;  // 0 disables the limiter

    void validate() const;
};

/// Reads the endpoint fields from a JSON object; unknown keys are rejected.
AgentEndpoint endpoint_from_json(const nlohmann::json& j);
nlohmann::json endpoint_to_json(const AgentEndpoint& e);

enum class Role { System, User, Assistant };
std::string_view to_string(Role r) noexcept;

struct Message {
    Role role;
    std::string content;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string chat(std::span<const Message> messages) = 0;
    virtual std::string id() const = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// Raw provider vectors, one per text; validation happens in deckgen::embed.
    virtual std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) = 0;
    virtual std::string id() const = 0;
};

/// Token bucket with capacity equal to one minute's allowance.
class RateLimiter {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    explicit RateLimiter(double requests_per_minute, Clock clock = std::chrono::steady_clock::now);

    /// Takes one token and returns how long the caller must wait before using it.
    std::chrono::milliseconds reserve();
    void acquire();

    /// Process-wide limiter shared by every client of the endpoint.
    static std::shared_ptr<RateLimiter> for_endpoint(const AgentEndpoint& e);

private:
    double rate_per_ms_;
    double capacity_;
    double tokens_;
    Clock clock_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mu_;
};

struct RetryPolicy {
    std::chrono::milliseconds base{1000};
    double factor = 2.0;
    double jitter = 0.2;  // +/- fraction of the nominal delay
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

/// Chat-completions style client. The API key is read from the environment
/// on every call and is never stored.
class HttpChatClient final : public ChatClient {
public:
    HttpChatClient(AgentEndpoint endpoint, std::shared_ptr<HttpTransport> transport = make_default_transport(),
                   RetryPolicy retry = {});

    std::string chat(std::span<const Message> messages) override;
    std::string id() const override { return endpoint_.model_id; }
    const AgentEndpoint& endpoint() const noexcept { return endpoint_; }

private:
    AgentEndpoint endpoint_;
    std::shared_ptr<HttpTransport> transport_;
    RetryPolicy retry_;
    std::shared_ptr<RateLimiter> limiter_;
};

class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(AgentEndpoint endpoint, std::shared_ptr<HttpTransport> transport = make_default_transport(),
                 RetryPolicy retry = {});

    std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;
    std::string id() const override { return endpoint_.model_id; }

private:
    AgentEndpoint endpoint_;
    std::shared_ptr<HttpTransport> transport_;
    RetryPolicy retry_;
    std::shared_ptr<RateLimiter> limiter_;
};

/// Offline encoder: character trigrams of the normalized text (padded with
/// boundary markers) hashed into 64 buckets, then L2-normalized.
class HashingEmbedder final : public Embedder {
public:
    static constexpr std::size_t kDimension = 64;
    std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;
    std::string id() const override { return "hash-trigram-64"; }
};

/// Replays canned replies in order; throws once exhausted.
class ReplayChatClient final : public ChatClient {
public:
    explicit ReplayChatClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string chat(std::span<const Message> messages) override;
    std::string id() const override { return "replay"; }
    std::size_t calls() const;
    const std::vector<std::vector<Message>>& requests() const { return requests_; }

private:
    std::vector<std::string> replies_;
    std::vector<std::vector<Message>> requests_;
    mutable std::mutex mu_;
};

/// Picks the first rule whose `match` occurs in the last user message.
/// Safe for concurrent callers since the reply does not depend on call order.
class MatchingChatClient final : public ChatClient {
public:
    struct Rule {
        std::string match;
        std::string reply;
    };
    explicit MatchingChatClient(std::vector<Rule> rules, std::string fallback = {})
        : rules_(std::move(rules)), fallback_(std::move(fallback)) {}
    std::string chat(std::span<const Message> messages) override;
    std::string id() const override { return "replay-match"; }

private:
    std::vector<Rule> rules_;
    std::string fallback_;
};

// ---- prompts ----

enum class PromptRegime { Basic, Cot, KnowledgeDriven };
std::string_view to_string(PromptRegime r) noexcept;
PromptRegime regime_from_string(std::string_view s);

inline constexpr std::size_t kMinBackgroundWords = 250;
inline constexpr std::size_t kMaxBackgroundWords = 1200;

struct PlayerContext {
    std::vector<std::string> deck_listing;
    PromptRegime regime = PromptRegime::Basic;
    std::optional<std::string> knowledge_background;

    void validate() const;
};

/// A rendered template split the way it is sent: system part and instruction part.
struct PromptParts {
    std::string system;
    std::string instruction;

    std::string joined() const { return system + "\n\n" + instruction; }
};

PromptParts judge_prompt_parts(const Deck& deck, const Card& target);
PromptParts player_prompt_parts(const PlayerContext& ctx);
PromptParts background_prompt_parts(const Deck& deck);

std::string render_judge_prompt(const Deck& deck, const Card& target);
std::string render_player_prompt(const PlayerContext& ctx);
std::string render_background_prompt(const Deck& deck);

std::size_t count_words(std::string_view text);

/// Parses {"knowledge_background": "..."}; tolerates a surrounding code fence.
std::string parse_background_reply(std::string_view reply);
std::string generate_knowledge_background(const Deck& deck, ChatClient& chat);

JudgeToken parse_judge_reply(std::string_view raw);

// ---- game agents ----

struct Exchange {
    std::string player_text;
    JudgeToken token;
};

class Player {
public:
    virtual ~Player() = default;
    /// Next player message given the answered exchanges so far.
    virtual std::string next_move(std::span<const Exchange> history) = 0;
};

class Judge {
public:
    virtual ~Judge() = default;
    /// Raw judge reply to `player_line`; parsed by the engine.
    virtual std::string respond(std::span<const Exchange> history, std::string_view player_line) = 0;
};

/// Dialog history in the transcript form appended to both prompts.
std::string format_dialog_history(std::span<const Exchange> history, std::optional<std::string_view> pending);

class LlmPlayer final : public Player {
public:
    LlmPlayer(std::shared_ptr<ChatClient> chat, PlayerContext ctx);
    std::string next_move(std::span<const Exchange> history) override;

private:
    std::shared_ptr<ChatClient> chat_;
    PromptParts prompt_;
};

class LlmJudge final : public Judge {
public:
    LlmJudge(std::shared_ptr<ChatClient> chat, const Deck& deck, const Card& target);
    std::string respond(std::span<const Exchange> history, std::string_view player_line) override;

private:
    std::shared_ptr<ChatClient> chat_;
    PromptParts prompt_;
};

/// Attribute cards look like "attr0:yes|attr1:no|attr2:yes".
/// Returns attribute index -> value; empty when the text is not in that form.
std::map<int, bool> parse_attribute_card(std::string_view text);
std::string make_attribute_card(const std::vector<bool>& bits);

class RuleJudge final : public Judge {
public:
    RuleJudge(const Deck& deck, const Card& target, std::string sentinel = std::string(kDefaultSentinel));
    std::string respond(std::span<const Exchange> history, std::string_view player_line) override;

private:
    std::map<int, bool> target_attrs_;
    std::string sentinel_;
};

class HalvingOraclePlayer final : public Player {
public:
    explicit HalvingOraclePlayer(const Deck& deck, std::string sentinel = std::string(kDefaultSentinel));
    std::string next_move(std::span<const Exchange> history) override;

private:
    std::vector<std::string> texts_;
    std::vector<std::map<int, bool>> attrs_;
    std::string sentinel_;
};

class RandomGuesserPlayer final : public Player {
public:
    RandomGuesserPlayer(const Deck& deck, std::uint64_t seed, std::string sentinel = std::string(kDefaultSentinel));
    std::string next_move(std::span<const Exchange> history) override;

private:
    std::vector<std::string> order_;
    std::string sentinel_;
};

class ScriptedPlayer final : public Player {
public:
    explicit ScriptedPlayer(std::vector<std::string> lines) : lines_(std::move(lines)) {}
    std::string next_move(std::span<const Exchange> history) override;
    std::size_t calls() const noexcept { return calls_; }

private:
    std::vector<std::string> lines_;
    std::size_t calls_ = 0;
};

/// Replays raw judge replies in order, repeating the last one when exhausted.
class ScriptedJudge final : public Judge {
public:
    explicit ScriptedJudge(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string respond(std::span<const Exchange> history, std::string_view player_line) override;
    std::size_t calls() const noexcept { return calls_; }

private:
    std::vector<std::string> replies_;
    std::size_t calls_ = 0;
};

}  // namespace guessarena::agents
