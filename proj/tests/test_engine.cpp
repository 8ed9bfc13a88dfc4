#include <doctest.h>

#include <chrono>
#include <set>

#include "guessarena/engine.hpp"
#include "guessarena/transcript.hpp"
#include "support.hpp"

using namespace guessarena;
using namespace guessarena::engine;
using guessarena::testing::attribute_deck;
using guessarena::testing::make_deck;
using guessarena::testing::numbered;

namespace {

// Checks the structural invariants every finished round must satisfy.
void check_transcript(const RoundResult& r, int max_turns) {
    int ends = 0;
    for (std::size_t i = 0; i < r.transcript.size(); ++i) {
        CHECK(r.transcript[i].index == static_cast<int>(i) + 1);
        CHECK_FALSE(r.transcript[i].player_text.empty());
        ends += r.transcript[i].judge_token == JudgeToken::End ? 1 : 0;
    }
    CHECK(static_cast<int>(r.transcript.size()) <= max_turns);
    CHECK(r.t_model >= 1);
    if (r.terminated_by == Termination::FinalGuess) {
        CHECK(ends <= 1);
        CHECK(r.transcript.back().is_final_guess);
        CHECK(r.t_model == static_cast<int>(r.transcript.size()));
    }
    if (r.terminated_by == Termination::MaxTurns) {
        CHECK(ends == 0);
        CHECK(r.t_model == max_turns);
        CHECK_FALSE(r.correct);
    }
}

GameConfig config(int max_turns = 0) {
    GameConfig cfg;
    cfg.max_turns = max_turns;
    return cfg;
}

}  // namespace

TEST_CASE("GameConfig") {
    auto deck = make_deck(numbered(5));
    CHECK(config().effective_max_turns(deck) == 5);
    CHECK(config(3).effective_max_turns(deck) == 3);
    GameConfig bad;
    bad.judge_retries = -1;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = GameConfig{};
    bad.final_guess_sentinel = "";
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("GameState enforces the phase order") {
    auto deck = make_deck({"a1", "b2"});
    GameState s(deck, Card("a1"));
    CHECK(s.phase() == Phase::AwaitingPlayer);
    CHECK_THROWS_AS(s.record_judge(JudgeToken::Yes, false, 0), Error);
    s.submit_player("q?", std::nullopt, false);
    CHECK(s.phase() == Phase::AwaitingJudge);
    CHECK_THROWS_AS(s.submit_player("again?", std::nullopt, false), Error);
    s.record_judge(JudgeToken::No, false, 0);
    CHECK(s.phase() == Phase::AwaitingPlayer);
    CHECK(s.turns().size() == 1);
    CHECK(s.history()[0].token == JudgeToken::No);
    s.finish();
    CHECK(s.phase() == Phase::Finished);
    CHECK_THROWS_AS(s.submit_player("late", std::nullopt, false), Error);
    CHECK_THROWS_AS(GameState(deck, Card("zz")), Error);
}

TEST_CASE("player line extraction") {
    CHECK(extract_player_line("Thinking...\nFINAL GUESS: x\nbye", "FINAL GUESS:") == "FINAL GUESS: x");
    CHECK(extract_player_line("\n\n  Is it red?  \nmore", "FINAL GUESS:") == "Is it red?");
    CHECK(extract_player_line("   \n", "FINAL GUESS:").empty());
    CHECK(extract_player_line("so my final guess: quasar", "FINAL GUESS:") == "so my final guess: quasar");
}

TEST_CASE("guess resolution") {
    auto deck = make_deck({"black hole", "hole", "quasar", "neutron star", "star"});
    auto idx = [&](std::string_view line) { return resolve_guess(deck, line, "FINAL GUESS:").card_index; };
    CHECK(idx("FINAL GUESS: quasar") == 2);
    CHECK(idx("FINAL GUESS: Quasar.") == 2);
    CHECK(idx("FINAL GUESS: it is a black hole") == 0);
    CHECK(idx("FINAL GUESS: star") == 4);
    CHECK(idx("FINAL GUESS: hole") == 1);
    CHECK_FALSE(idx("FINAL GUESS: quasar or star").has_value());
    CHECK_FALSE(idx("FINAL GUESS: nebula").has_value());
    CHECK(resolve_guess(deck, "final guess:  quasar ", "FINAL GUESS:").guess_text == "quasar");
}

TEST_CASE("halving oracle wins every round in four turns") {
    auto deck = attribute_deck(3);
    for (const auto& target : deck.cards()) {
        agents::HalvingOraclePlayer player(deck);
        agents::RuleJudge judge(deck, target);
        auto r = play_round(deck, target, player, judge, config());
        CHECK(r.correct);
        CHECK(r.t_model == 4);
        CHECK(r.terminated_by == Termination::FinalGuess);
        CHECK(r.final_guess == target.text());
        CHECK_FALSE(r.error_detail.has_value());
        check_transcript(r, 8);
        CHECK(r.transcript.back().judge_token == JudgeToken::End);
    }
}

TEST_CASE("immediate correct guess") {
    auto deck = make_deck({"black hole", "quasar"});
    agents::ScriptedPlayer player({"FINAL GUESS: quasar"});
    agents::RuleJudge judge(deck, Card("quasar"));
    auto r = play_round(deck, Card("quasar"), player, judge, config());
    CHECK(r.correct);
    CHECK(r.t_model == 1);
    check_transcript(r, 2);
}

TEST_CASE("wrong final guess ends the round") {
    auto deck = make_deck({"black hole", "quasar"});
    agents::ScriptedPlayer player({"FINAL GUESS: black hole"});
    agents::RuleJudge judge(deck, Card("quasar"));
    auto r = play_round(deck, Card("quasar"), player, judge, config());
    CHECK_FALSE(r.correct);
    CHECK(r.terminated_by == Termination::FinalGuess);
    CHECK(r.final_guess == "black hole");
    CHECK(r.t_model == 1);
}

TEST_CASE("budget exhaustion") {
    auto deck = attribute_deck(2);
    std::vector<std::string> questions(4, "attribute 0?");
    agents::ScriptedPlayer player(questions);
    agents::RuleJudge judge(deck, deck.cards()[0]);
    auto r = play_round(deck, deck.cards()[0], player, judge, config());
    CHECK(r.terminated_by == Termination::MaxTurns);
    CHECK(r.t_model == 4);
    CHECK(r.transcript.size() == 4);
    CHECK(player.calls() == 4);
    CHECK_FALSE(r.final_guess.has_value());
    check_transcript(r, 4);
}

TEST_CASE("unparsable judge reply after retries") {
    auto deck = make_deck({"black hole", "quasar", "pulsar"});
    agents::ScriptedPlayer player({"Is it a star?"});
    agents::ScriptedJudge judge({"maybe [Yes] or [No]"});
    GameConfig cfg = config();
    cfg.judge_retries = 2;
    auto r = play_round(deck, Card("quasar"), player, judge, cfg);
    CHECK(r.terminated_by == Termination::ProtocolError);
    CHECK(r.error_detail == "unparsable_judge_reply");
    CHECK(judge.calls() == 3);
    CHECK(r.t_model == 1);
    CHECK_FALSE(r.correct);
}

TEST_CASE("judge recovers within the retry budget") {
    auto deck = make_deck({"black hole", "quasar", "pulsar"});
    agents::ScriptedPlayer player({"Is it a star?", "FINAL GUESS: pulsar"});
    agents::ScriptedJudge judge({"hmm", "[Yes]", "[End]"});
    auto r = play_round(deck, Card("pulsar"), player, judge, config());
    CHECK(r.correct);
    CHECK(r.t_model == 2);
    CHECK(r.transcript[0].judge_token == JudgeToken::Yes);
}

TEST_CASE("empty player replies") {
    auto deck = make_deck({"black hole", "quasar"});
    agents::ScriptedPlayer player({});
    agents::RuleJudge judge(deck, Card("quasar"));
    auto r = play_round(deck, Card("quasar"), player, judge, config());
    CHECK(r.terminated_by == Termination::ProtocolError);
    CHECK(r.error_detail == "empty_player_reply");
    CHECK(player.calls() == 3);
    CHECK(r.t_model == 1);
    CHECK(r.transcript.empty());
}

TEST_CASE("final guess details") {
    auto deck = make_deck({"black hole", "quasar"});
    SUBCASE("guess that matches no card") {
        agents::ScriptedPlayer player({"FINAL GUESS: nebula"});
        agents::ScriptedJudge judge({"[End]"});
        auto r = play_round(deck, Card("quasar"), player, judge, config());
        CHECK_FALSE(r.correct);
        CHECK(r.error_detail == "unparsable_guess");
        CHECK(r.final_guess == "nebula");
    }
    SUBCASE("End without the sentinel resolves the whole line") {
        agents::ScriptedPlayer player({"Is it the quasar?"});
        agents::ScriptedJudge judge({"[End]"});
        auto r = play_round(deck, Card("quasar"), player, judge, config());
        CHECK(r.correct);
        CHECK(r.transcript[0].is_final_guess);
    }
    SUBCASE("judge omits End on a sentinel line") {
        agents::ScriptedPlayer player({"FINAL GUESS: quasar"});
        agents::ScriptedJudge judge({"[Yes]"});
        auto r = play_round(deck, Card("quasar"), player, judge, config());
        CHECK(r.correct);
        CHECK(r.terminated_by == Termination::FinalGuess);
        CHECK(r.error_detail == "judge_missed_end");
    }
    SUBCASE("verbose reply keeps the raw text") {
        agents::ScriptedPlayer player({"Let me think.\nFINAL GUESS: quasar"});
        agents::RuleJudge judge(deck, Card("quasar"));
        auto r = play_round(deck, Card("quasar"), player, judge, config());
        CHECK(r.transcript[0].player_text == "FINAL GUESS: quasar");
        CHECK(r.transcript[0].player_raw == "Let me think.\nFINAL GUESS: quasar");
    }
}

TEST_CASE("repeated-guess mode continues after wrong guesses") {
    auto deck = make_deck(numbered(5));
    GameConfig cfg = config();
    cfg.repeated_guess_mode = true;
    agents::ScriptedPlayer player({"FINAL GUESS: card 1", "FINAL GUESS: card 2", "FINAL GUESS: card 4"});
    agents::RuleJudge judge(deck, Card("card 4"));
    auto r = play_round(deck, Card("card 4"), player, judge, cfg);
    CHECK(r.correct);
    CHECK(r.t_model == 3);
}

TEST_CASE("logical clock timestamps are reproducible") {
    auto deck = make_deck({"black hole", "quasar"});
    auto run = [&] {
        LogicalClock clock({}, std::chrono::milliseconds{1});
        agents::ScriptedPlayer player({"FINAL GUESS: quasar"});
        agents::RuleJudge judge(deck, Card("quasar"));
        return play_round(deck, Card("quasar"), player, judge, config(), &clock);
    };
    auto a = run(), b = run();
    CHECK(a.started_at == "1970-01-01T00:00:00.000Z");
    CHECK(a.started_at == b.started_at);
    CHECK(a.ended_at == b.ended_at);
    CHECK(a.transcript[0].wall_time_ms == b.transcript[0].wall_time_ms);
}

TEST_CASE("run_deck plays one round per card") {
    auto deck = make_deck(numbered(30));
    PlayerFactory pf = [](const Card& target, std::size_t, std::uint64_t) {
        return std::make_unique<agents::ScriptedPlayer>(std::vector<std::string>{"FINAL GUESS: " + target.text()});
    };
    JudgeFactory jf = [&](const Card& target, std::size_t) {
        return std::make_unique<agents::RuleJudge>(deck, target);
    };
    for (int parallelism : {1, 4}) {
        RunOptions opts;
        opts.parallelism = parallelism;
        auto results = run_deck(deck, pf, jf, config(), 7, opts);
        REQUIRE(results.size() == 30);
        std::set<std::string> targets;
        for (std::size_t i = 0; i < results.size(); ++i) {
            CHECK(results[i].target_card == deck.cards()[i]);
            CHECK(results[i].correct);
            CHECK(results[i].round_id == make_round_id(deck, i));
            targets.insert(results[i].target_card.key());
        }
        CHECK(targets.size() == 30);
    }
}

TEST_CASE("run_deck isolates a failing round") {
    auto deck = make_deck(numbered(4));
    PlayerFactory pf = [](const Card& target, std::size_t i, std::uint64_t) -> std::unique_ptr<agents::Player> {
        if (i == 2) throw Error(ErrorCode::ProviderError, "boom");
        return std::make_unique<agents::ScriptedPlayer>(std::vector<std::string>{"FINAL GUESS: " + target.text()});
    };
    JudgeFactory jf = [&](const Card& target, std::size_t) {
        return std::make_unique<agents::RuleJudge>(deck, target);
    };
    auto results = run_deck(deck, pf, jf, config(), 1);
    int errors = 0;
    for (const auto& r : results) errors += r.terminated_by == Termination::ProtocolError ? 1 : 0;
    CHECK(errors == 1);
    CHECK(results[2].terminated_by == Termination::ProtocolError);
    CHECK(results[3].correct);
}

TEST_CASE("t_rand") {
    CHECK(measure_t_rand(30, TRandMode::Analytic, 0, 0) == 15.5);
    CHECK(measure_t_rand(2, TRandMode::Analytic, 0, 0) == 1.5);
    // Brute force over target positions gives the same mean.
    double sum = 0;
    for (int pos = 1; pos <= 30; ++pos) sum += pos;
    CHECK(sum / 30 == 15.5);
    auto emp = measure_t_rand(30, TRandMode::Empirical, 10000, 11);
    CHECK(std::abs(emp - 15.5) < 0.3);
    CHECK(measure_t_rand(30, TRandMode::Empirical, 200, 11) == measure_t_rand(30, TRandMode::Empirical, 200, 11));
    CHECK_THROWS_AS(measure_t_rand(1, TRandMode::Analytic, 0, 0), Error);
}

TEST_CASE("transcript JSONL round-trip") {
    auto deck = attribute_deck(2);
    agents::HalvingOraclePlayer player(deck);
    agents::RuleJudge judge(deck, deck.cards()[1]);
    LogicalClock clock;
    TranscriptRecord rec;
    rec.round = play_round(deck, deck.cards()[1], player, judge, config(), &clock);
    rec.round.round_id = make_round_id(deck, 1);
    rec.deck_digest = deck.digest();
    rec.regime = "basic";
    rec.max_turns = 4;
    rec.deck_size = 4;
    rec.player = "oracle";
    rec.domain = "attributes";
    rec.provenance = {5, "v"};
    auto text = to_jsonl({rec, rec});
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    auto back = parse_transcripts(text);
    REQUIRE(back.size() == 2);
    CHECK(to_jsonl(back) == text);
    CHECK(back[0].round.transcript.size() == rec.round.transcript.size());
    CHECK(back[0].provenance.seed == 5);
    CHECK_THROWS_AS(parse_transcripts("{not json}\n"), Error);
    CHECK_THROWS_AS(parse_transcripts("{\"round_id\":\"x\"}\n"), Error);
}
