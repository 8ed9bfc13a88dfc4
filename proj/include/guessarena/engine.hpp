#pragma once

// Round execution: the player/judge dialogue, termination rules and batch runs.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "guessarena/agents.hpp"
#include "guessarena/core.hpp"

namespace guessarena::engine {

struct GameConfig {
    int max_turns = 0;  // 0 means "deck size"
    int judge_retries = 2;
    int player_reprompts = 2;
    std::string final_guess_sentinel{agents::kDefaultSentinel};
    bool repeated_guess_mode = false;

    int effective_max_turns(const Deck& deck) const;
    void validate() const;
};

enum class Phase { AwaitingPlayer, AwaitingJudge, Finished };

/// Dialogue state with enforced phase transitions.
class GameState {
public:
    GameState(const Deck& deck, Card target);

    Phase phase() const noexcept { return phase_; }
    const Card& target() const noexcept { return target_; }
    const std::vector<Turn>& turns() const noexcept { return turns_; }
    const std::vector<agents::Exchange>& history() const noexcept { return history_; }

    /// awaiting_player -> awaiting_judge
    void submit_player(std::string line, std::optional<std::string> raw, bool sentinel);
    /// awaiting_judge -> awaiting_player; returns the appended turn.
    const Turn& record_judge(JudgeToken token, bool is_final_guess, std::int64_t wall_time_ms);
    void finish();

    const std::string& pending_line() const noexcept { return pending_line_; }
    bool pending_has_sentinel() const noexcept { return pending_sentinel_; }

private:
    const Deck* deck_;
    Card target_;
    std::vector<Turn> turns_;
    std::vector<agents::Exchange> history_;
    Phase phase_ = Phase::AwaitingPlayer;
    std::string pending_line_;
    std::optional<std::string> pending_raw_;
    bool pending_sentinel_ = false;
};

/// Source of timestamps; deterministic runs use a logical clock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::system_clock::time_point now() = 0;
};

class SystemClock final : public Clock {
public:
    std::chrono::system_clock::time_point now() override { return std::chrono::system_clock::now(); }
};

/// Starts at `origin` and advances by `step` on every reading.
class LogicalClock final : public Clock {
public:
    explicit LogicalClock(std::chrono::system_clock::time_point origin = {},
                          std::chrono::milliseconds step = std::chrono::milliseconds{0})
        : current_(origin), step_(step) {}
    std::chrono::system_clock::time_point now() override {
        auto t = current_;
        current_ += step_;
        return t;
    }

private:
    std::chrono::system_clock::time_point current_;
    std::chrono::milliseconds step_;
};

/// Picks the line used as the player's move: the first line carrying the
/// sentinel, otherwise the first non-empty line.
std::string extract_player_line(std::string_view raw, std::string_view sentinel);

struct GuessResolution {
    std::optional<std::size_t> card_index;
    std::string guess_text;
};

/// Maps a guess to a deck card: exact normalized equality first, then
/// whole-word occurrences, discarding matches nested inside longer matches.
GuessResolution resolve_guess(const Deck& deck, std::string_view line, std::string_view sentinel);

RoundResult play_round(const Deck& deck, const Card& target, agents::Player& player, agents::Judge& judge,
                       const GameConfig& cfg, Clock* clock = nullptr);

using PlayerFactory = std::function<std::unique_ptr<agents::Player>(const Card& target, std::size_t index,
                                                                    std::uint64_t seed)>;
using JudgeFactory = std::function<std::unique_ptr<agents::Judge>(const Card& target, std::size_t index)>;
using ClockFactory = std::function<std::unique_ptr<Clock>(std::size_t index)>;

struct RunOptions {
    int parallelism = 1;
    ClockFactory clock_factory;  // defaults to SystemClock
};

std::string make_round_id(const Deck& deck, std::size_t index);

/// One round per card in deck order; failures are isolated per round.
std::vector<RoundResult> run_deck(const Deck& deck, const PlayerFactory& player_factory,
                                  const JudgeFactory& judge_factory, const GameConfig& cfg, std::uint64_t seed,
                                  const RunOptions& opts = {});

enum class TRandMode { Analytic, Empirical };
std::string_view to_string(TRandMode m) noexcept;
TRandMode t_rand_mode_from_string(std::string_view s);

double measure_t_rand(int deck_size, TRandMode mode, int trials, std::uint64_t seed);

}  // namespace guessarena::engine
