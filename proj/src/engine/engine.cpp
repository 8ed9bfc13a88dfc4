#include "guessarena/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

#include "guessarena/random.hpp"

namespace guessarena::engine {

namespace {

// ASCII case-insensitive find; the sentinel is plain ASCII.
std::size_t find_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty() || needle.size() > haystack.size()) return std::string_view::npos;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < needle.size() && ok; ++k)
            ok = std::tolower(static_cast<unsigned char>(haystack[i + k])) ==
                 std::tolower(static_cast<unsigned char>(needle[k]));
        if (ok) return i;
    }
    return std::string_view::npos;
}

std::string strip_decoration(std::string s) {
    constexpr std::string_view kDecor = " \"'`.,;:!?*_";
    auto b = s.find_first_not_of(kDecor);
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(kDecor);
    return s.substr(b, e - b + 1);
}

std::int64_t elapsed_ms(std::chrono::system_clock::time_point a, std::chrono::system_clock::time_point b) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(b - a).count();
}

}  // namespace

int GameConfig::effective_max_turns(const Deck& deck) const {
    return max_turns > 0 ? max_turns : static_cast<int>(deck.size());
}

void GameConfig::validate() const {
    if (max_turns < 0) throw Error(ErrorCode::InvalidArgument, "max_turns must be >= 1");
    if (judge_retries < 0) throw Error(ErrorCode::InvalidArgument, "judge_retries must be >= 0");
    if (player_reprompts < 0) throw Error(ErrorCode::InvalidArgument, "player_reprompts must be >= 0");
    if (trim(final_guess_sentinel).empty()) throw Error(ErrorCode::InvalidArgument, "final guess sentinel is empty");
}

GameState::GameState(const Deck& deck, Card target) : deck_(&deck), target_(std::move(target)) {
    if (!deck_->contains(target_)) throw Error(ErrorCode::TargetNotInDeck, "target card not in deck: " + target_.text());
}

void GameState::submit_player(std::string line, std::optional<std::string> raw, bool sentinel) {
    if (phase_ != Phase::AwaitingPlayer) throw Error(ErrorCode::ProtocolError, "player move out of turn");
    pending_line_ = std::move(line);
    pending_raw_ = std::move(raw);
    pending_sentinel_ = sentinel;
    phase_ = Phase::AwaitingJudge;
}

const Turn& GameState::record_judge(JudgeToken token, bool is_final_guess, std::int64_t wall_time_ms) {
    if (phase_ != Phase::AwaitingJudge) throw Error(ErrorCode::ProtocolError, "judge reply out of turn");
    Turn turn;
    turn.index = static_cast<int>(turns_.size()) + 1;
    turn.player_text = pending_line_;
    turn.judge_token = token;
    turn.is_final_guess = is_final_guess;
    turn.wall_time_ms = wall_time_ms;
    turn.player_raw = std::move(pending_raw_);
    turns_.push_back(std::move(turn));
    history_.push_back({pending_line_, token});
    pending_line_.clear();
    pending_raw_.reset();
    pending_sentinel_ = false;
    phase_ = Phase::AwaitingPlayer;
    return turns_.back();
}

void GameState::finish() { phase_ = Phase::Finished; }

std::string extract_player_line(std::string_view raw, std::string_view sentinel) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= raw.size()) {
        auto nl = raw.find('\n', start);
        auto line = trim(raw.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
        if (!line.empty()) lines.push_back(std::move(line));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    for (const auto& l : lines)
        if (find_ci(l, sentinel) != std::string_view::npos) return l;
    return lines.empty() ? std::string{} : lines.front();
}

GuessResolution resolve_guess(const Deck& deck, std::string_view line, std::string_view sentinel) {
    GuessResolution res;
    auto at = find_ci(line, sentinel);
    res.guess_text = trim(at == std::string_view::npos ? line : line.substr(at + sentinel.size()));
    const std::string norm = normalize_card(res.guess_text);
    const std::string bare = strip_decoration(norm);
    const auto& cards = deck.cards();
    for (std::size_t i = 0; i < cards.size(); ++i) {
        if (cards[i].key() == bare) {
            res.card_index = i;
            return res;
        }
    }
    struct Hit {
        std::size_t card, begin, end;
    };
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < cards.size(); ++i)
        for (auto pos : find_whole_word(norm, cards[i].key())) hits.push_back({i, pos, pos + cards[i].key().size()});
    std::vector<std::size_t> winners;
    for (const auto& h : hits) {
        bool nested = std::any_of(hits.begin(), hits.end(), [&](const Hit& o) {
            return o.card != h.card && o.begin <= h.begin && h.end <= o.end && (o.end - o.begin) > (h.end - h.begin);
        });
        if (!nested && std::find(winners.begin(), winners.end(), h.card) == winners.end()) winners.push_back(h.card);
    }
    if (winners.size() == 1) res.card_index = winners.front();
    return res;
}

RoundResult play_round(const Deck& deck, const Card& target, agents::Player& player, agents::Judge& judge,
                       const GameConfig& cfg, Clock* clock) {
    cfg.validate();
    SystemClock system_clock;
    if (clock == nullptr) clock = &system_clock;
    const int max_turns = cfg.effective_max_turns(deck);
    const auto target_index = deck.index_of(target);
    if (!target_index) throw Error(ErrorCode::TargetNotInDeck, "target card not in deck: " + target.text());

    GameState state(deck, deck.cards()[*target_index]);
    RoundResult r;
    r.target_card = deck.cards()[*target_index];
    r.started_at = format_timestamp(clock->now());

    auto finish = [&](Termination cause) {
        state.finish();
        r.transcript = state.turns();
        r.terminated_by = cause;
        int turns = static_cast<int>(r.transcript.size());
        r.t_model = cause == Termination::MaxTurns ? max_turns : std::max(1, turns);
        r.ended_at = format_timestamp(clock->now());
        return r;
    };
    auto protocol_error = [&](std::string detail) {
        r.correct = false;
        r.final_guess.reset();
        r.error_detail = std::move(detail);
        return finish(Termination::ProtocolError);
    };

    try {
        while (static_cast<int>(state.turns().size()) < max_turns) {
            auto turn_start = clock->now();

            std::string raw;
            for (int attempt = 0; attempt <= cfg.player_reprompts; ++attempt) {
                raw = player.next_move(state.history());
                if (!trim(raw).empty()) break;
            }
            std::string line = extract_player_line(raw, cfg.final_guess_sentinel);
            if (line.empty()) return protocol_error("empty_player_reply");
            bool sentinel = find_ci(line, cfg.final_guess_sentinel) != std::string_view::npos;
            std::optional<std::string> raw_copy;
            if (trim(raw) != line) raw_copy = raw;
            state.submit_player(line, std::move(raw_copy), sentinel);

            std::optional<JudgeToken> token;
            for (int attempt = 0; attempt <= cfg.judge_retries && !token; ++attempt) {
                try {
                    token = agents::parse_judge_reply(judge.respond(state.history(), line));
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::UnparsableJudgeReply) throw;
                }
            }
            if (!token) return protocol_error("unparsable_judge_reply");

            const bool is_final = sentinel || *token == JudgeToken::End;
            state.record_judge(*token, is_final, elapsed_ms(turn_start, clock->now()));
            if (!is_final) continue;

            auto guess = resolve_guess(deck, line, cfg.final_guess_sentinel);
            const bool correct = guess.card_index && *guess.card_index == *target_index;
            if (cfg.repeated_guess_mode && !correct) continue;

            r.final_guess = guess.guess_text;
            r.correct = correct;
            if (!guess.card_index) r.error_detail = "unparsable_guess";
            else if (*token != JudgeToken::End) r.error_detail = "judge_missed_end";
            return finish(Termination::FinalGuess);
        }
    } catch (const Error& e) {
        return protocol_error(std::string(to_string(e.code())) + ": " + e.what());
    }
    r.correct = false;
    r.final_guess.reset();
    return finish(Termination::MaxTurns);
}

std::string make_round_id(const Deck& deck, std::size_t index) { return deck.digest() + "-" + std::to_string(index); }

std::vector<RoundResult> run_deck(const Deck& deck, const PlayerFactory& player_factory,
                                  const JudgeFactory& judge_factory, const GameConfig& cfg, std::uint64_t seed,
                                  const RunOptions& opts) {
    cfg.validate();
    const std::size_t n = deck.size();
    std::vector<RoundResult> results(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const Card& target = deck.cards()[i];
            std::unique_ptr<Clock> clock = opts.clock_factory ? opts.clock_factory(i) : std::make_unique<SystemClock>();
            RoundResult r;
            try {
                auto player = player_factory(target, i, derive_seed(seed, i));
                auto judge = judge_factory(target, i);
                r = play_round(deck, target, *player, *judge, cfg, clock.get());
            } catch (const std::exception& e) {
                r = RoundResult{};
                r.target_card = target;
                r.terminated_by = Termination::ProtocolError;
                r.t_model = 1;
                r.error_detail = std::string("round_setup: ") + e.what();
                r.started_at = r.ended_at = format_timestamp(clock->now());
            }
            r.round_id = make_round_id(deck, i);
            results[i] = std::move(r);
        }
    };
    const std::size_t pool = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opts.parallelism, 1)), 1, std::max<std::size_t>(n, 1));
    {
        std::vector<std::jthread> threads;
        for (std::size_t t = 1; t < pool; ++t) threads.emplace_back(work);
        work();
    }
    return results;
}

std::string_view to_string(TRandMode m) noexcept { return m == TRandMode::Analytic ? "analytic" : "empirical"; }

TRandMode t_rand_mode_from_string(std::string_view s) {
    if (s == "analytic") return TRandMode::Analytic;
    if (s == "empirical") return TRandMode::Empirical;
    throw Error(ErrorCode::InvalidArgument, "unknown t_rand mode: " + std::string(s));
}

double measure_t_rand(int deck_size, TRandMode mode, int trials, std::uint64_t seed) {
    if (deck_size < 2) throw Error(ErrorCode::InvalidArgument, "t_rand needs deck_size >= 2");
    if (mode == TRandMode::Analytic) return (deck_size + 1) / 2.0;
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "empirical t_rand needs trials >= 1");

    std::vector<Card> cards;
    for (int i = 1; i <= deck_size; ++i) cards.emplace_back("card " + std::to_string(i));
    Deck deck({"random-baseline", "uniform guessing baseline", {}}, std::move(cards), {}, "none", {}, "");
    GameConfig cfg;
    cfg.max_turns = deck_size;
    cfg.repeated_guess_mode = true;
    LogicalClock clock;
    double total = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        const Card& target = deck.cards()[rng.below(static_cast<std::uint64_t>(deck_size))];
        agents::RandomGuesserPlayer player(deck, rng.next(), cfg.final_guess_sentinel);
        agents::RuleJudge judge(deck, target, cfg.final_guess_sentinel);
        total += play_round(deck, target, player, judge, cfg, &clock).t_model;
    }
    return total / trials;
}

}  // namespace guessarena::engine
