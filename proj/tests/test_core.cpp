#include <doctest.h>

#include <set>

#include "guessarena/deck_io.hpp"
#include "guessarena/random.hpp"
#include "support.hpp"

using namespace guessarena;
using guessarena::testing::make_deck;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("normalize_card") {
    CHECK(normalize_card("  Health  Insurance Policy ") == "health insurance policy");
    CHECK(normalize_card("pharmacologist") == "pharmacologist");
    CHECK(normalize_card("FinTech") == "fintech");
    CHECK(normalize_card("\tA\n b ") == "a b");
    CHECK(normalize_card("ÉCOLE Über") == "école über");
    CHECK(normalize_card(normalize_card(" Mixed  CASE ")) == normalize_card(" Mixed  CASE "));
}

TEST_CASE("find_whole_word respects word boundaries") {
    CHECK(find_whole_word("the black hole", "hole") == std::vector<std::size_t>{10});
    CHECK(find_whole_word("blackhole", "hole").empty());
    CHECK(find_whole_word("hole, hole.", "hole") == std::vector<std::size_t>{0, 6});
    CHECK(find_whole_word("anything", "").empty());
    CHECK(find_whole_word("über_x hole", "x").empty());
}

TEST_CASE("Card validation") {
    CHECK(Card("Black Hole").key() == "black hole");
    CHECK(Card("Black Hole") == Card("black   hole"));
    CHECK(code_of([] { Card("   "); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { Card("a\nb"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { Card("a; b"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { Card("a", -1); }) == ErrorCode::InvalidArgument);
    CHECK(Card("x", 3).cluster_id() == 3);
}

TEST_CASE("Deck invariants") {
    auto deck = make_deck({"alpha", "Beta", "gamma"});
    CHECK(deck.size() == 3);
    CHECK(deck.index_of(Card("BETA")) == 1);
    CHECK_FALSE(deck.contains(Card("delta")));
    CHECK(deck.card_texts() == std::vector<std::string>{"alpha", "Beta", "gamma"});

    CHECK(code_of([] { make_deck({"only"}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { make_deck({"a", "A "}); }) == ErrorCode::DuplicateCard);
    CHECK(code_of([] {
              Deck(DomainSpec{"d", "x", {}}, {Card("a", 1), Card("b", 1)}, {KeywordCluster{0, {"a"}}}, "", {}, "");
          }) == ErrorCode::InvalidArgument);
}

TEST_CASE("Deck digest is stable and content-sensitive") {
    auto a = make_deck({"alpha", "beta"});
    auto b = make_deck({"Alpha ", "BETA"});
    auto c = make_deck({"beta", "alpha"});
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
    CHECK(a.digest().size() == 16);
}

TEST_CASE("DomainSpec validation") {
    CHECK_NOTHROW(DomainSpec{"finance", "money", {"fintech"}}.validate());
    CHECK(code_of([] { DomainSpec{"", "x", {}}.validate(); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { DomainSpec{"n", "x", {"a", "A"}}.validate(); }) == ErrorCode::DuplicateCard);
}

TEST_CASE("JudgeToken and Termination round-trip") {
    for (auto t : {JudgeToken::Yes, JudgeToken::No, JudgeToken::Invalid, JudgeToken::End})
        CHECK(judge_token_from_string(to_string(t)) == t);
    CHECK(judge_token_from_string("[yes]") == JudgeToken::Yes);
    CHECK(judge_token_from_string(" END ") == JudgeToken::End);
    CHECK(code_of([] { judge_token_from_string("maybe"); }) == ErrorCode::MalformedInput);
    for (auto t : {Termination::FinalGuess, Termination::MaxTurns, Termination::ProtocolError})
        CHECK(termination_from_string(to_string(t)) == t);
}

TEST_CASE("format_timestamp") {
    using namespace std::chrono;
    CHECK(format_timestamp(system_clock::time_point{}) == "1970-01-01T00:00:00.000Z");
    CHECK(format_timestamp(system_clock::time_point{milliseconds{1735689600123}}) == "2025-01-01T00:00:00.123Z");
}

TEST_CASE("Rng is seeded and portable") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng r(1);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        auto x = r.below(7);
        CHECK(x < 7);
        seen.insert(x);
        double u = r.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(seen.size() == 7);
    std::vector<int> v{1, 2, 3, 4, 5, 6};
    Rng(9).shuffle(v);
    std::multiset<int> ms(v.begin(), v.end());
    CHECK(ms == std::multiset<int>{1, 2, 3, 4, 5, 6});
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
}

TEST_CASE("deck JSON round-trip") {
    Deck deck(DomainSpec{"Astronomy", "stars", {"nova"}}, {Card("black hole", 0), Card("quasar", 1)},
              {KeywordCluster{0, {"black hole"}}, KeywordCluster{1, {"quasar", "pulsar"}}}, "enc", {0.3, 0.8},
              "2025-01-01T00:00:00.000Z");
    auto j = deck_to_json(deck);
    auto back = deck_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.digest() == deck.digest());
    CHECK(back.cards()[1].cluster_id() == 1);
    CHECK(back.clusters()[1].keywords.size() == 2);
    CHECK(back.thresholds().lower == doctest::Approx(0.3));
    CHECK(deck_to_json(back).dump() == j.dump());

    auto plain = deck_from_json(nlohmann::json::parse(R"({"domain":{"name":"d"},"cards":["a","b"]})"));
    CHECK(plain.size() == 2);
    CHECK(code_of([] { deck_from_json(nlohmann::json::parse(R"({"cards":["a","b"]})")); }) ==
          ErrorCode::MalformedInput);
}

TEST_CASE("text files are written atomically and read back") {
    auto dir = guessarena::testing::scratch_dir("core-io");
    write_text_file(dir / "nested" / "f.txt", "hello\n");
    CHECK(read_text_file(dir / "nested" / "f.txt") == "hello\n");
    CHECK_FALSE(std::filesystem::exists(dir / "nested" / "f.txt.tmp"));
    CHECK(code_of([&] { read_text_file(dir / "missing"); }) == ErrorCode::UnreadableSource);
}
