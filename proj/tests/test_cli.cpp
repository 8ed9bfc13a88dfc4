#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "guessarena/cli.hpp"
#include "guessarena/deck_io.hpp"
#include "support.hpp"

using namespace guessarena;
using guessarena::testing::fixtures;
using guessarena::testing::scratch_dir;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string error_code(const Outcome& o) {
    auto j = nlohmann::json::parse(o.err);
    return j.at("error").at("code").get<std::string>();
}

std::vector<std::string> golden_build_args(const std::filesystem::path& out_dir) {
    return {"build-deck",
            "--docs", (fixtures() / "corpus").string(),
            "--domain-name", "Astronomy",
            "--domain-desc", "Stars, planets, galaxies and the telescopes used to observe them",
            "--chat-endpoint", "replay:" + (fixtures() / "extraction_replies.json").string(),
            "--embed-endpoint", "sim:hash",
            "--clusters", "3",
            "--deck-size", "6",
            "--tau-lower", "0.05",
            "--tau-upper", "0.95",
            "--created-at", "2025-01-01T00:00:00.000Z",
            "--output-dir", out_dir.string(),
            "--seed", "7"};
}

std::vector<std::string> sim_run_args(const std::filesystem::path& out_dir) {
    return {"run", "--deck", (fixtures() / "attr8_deck.json").string(), "--player", "sim:halving",
            "--judge", "sim:rule", "--output-dir", out_dir.string(), "--seed", "11"};
}

void write_deck(const std::filesystem::path& path, int n, const std::string& domain) {
    std::vector<Card> cards;
    for (int i = 1; i <= n; ++i) cards.emplace_back("item " + std::to_string(i));
    Deck deck(DomainSpec{domain, "synthetic", {}}, cards, {}, "none", {}, "2025-01-01T00:00:00.000Z");
    write_text_file(path, deck_to_json(deck).dump(2));
}

}  // namespace

TEST_CASE("build-deck reproduces the golden deck") {
    auto dir = scratch_dir("cli-build");
    auto o = invoke(golden_build_args(dir));
    REQUIRE_MESSAGE(o.code == 0, o.err);
    CHECK(read_text_file(dir / "deck.json") == read_text_file(fixtures() / "golden_deck.json"));
    auto summary = nlohmann::json::parse(o.out);
    CHECK(summary["documents"] == 3);
    CHECK(summary["keywords_extracted"] == 23);
    CHECK(summary["deck_size"] == 6);
}

TEST_CASE("build-deck failures") {
    auto dir = scratch_dir("cli-build-fail");
    std::filesystem::create_directories(dir / "empty");
    auto args = golden_build_args(dir);
    auto docs = std::find(args.begin(), args.end(), "--docs");
    *(docs + 1) = (dir / "empty").string();
    auto o = invoke(args);
    CHECK(o.code == 1);
    CHECK(o.err.find("no documents") != std::string::npos);

    args = golden_build_args(dir);
    auto lower = std::find(args.begin(), args.end(), "--tau-lower");
    *(lower + 1) = "0.95";
    o = invoke(args);
    CHECK(o.code == 1);
    CHECK(error_code(o) == "InvalidParams");
    CHECK_FALSE(std::filesystem::exists(dir / "deck.json"));
}

TEST_CASE("run with simulated agents") {
    auto a = scratch_dir("cli-run-a");
    auto b = scratch_dir("cli-run-b");
    auto oa = invoke(sim_run_args(a));
    REQUIRE_MESSAGE(oa.code == 0, oa.err);
    REQUIRE(invoke(sim_run_args(b)).code == 0);
    for (auto f : {"transcripts.jsonl", "report.json", "report.md", "deck.json"})
        CHECK(read_text_file(a / f) == read_text_file(b / f));

    auto report = nlohmann::json::parse(read_text_file(a / "report.json"));
    CHECK(report["E"] == 1.0);
    CHECK(report["per_round"].size() == 8);
    CHECK(report["provenance"]["seed"] == 11);
    CHECK(report["params"]["t_rand"] == 4.5);
    for (const auto& r : report["per_round"]) CHECK(r["t_model"] == 4);

    SUBCASE("score is idempotent") {
        auto s = invoke({"score", "--transcripts", (a / "transcripts.jsonl").string()});
        REQUIRE(s.code == 0);
        CHECK(s.out == read_text_file(a / "report.json"));
        auto again = scratch_dir("cli-score");
        REQUIRE(invoke({"score", "--transcripts", (a / "transcripts.jsonl").string(), "--output-dir",
                        again.string()})
                    .code == 0);
        CHECK(read_text_file(again / "report.json") == read_text_file(a / "report.json"));
    }
    SUBCASE("score rejects malformed transcripts") {
        auto bad = scratch_dir("cli-score-bad");
        write_text_file(bad / "t.jsonl", "{\"round_id\": 1}\n");
        auto s = invoke({"score", "--transcripts", (bad / "t.jsonl").string()});
        CHECK(s.code == 1);
        CHECK(error_code(s) == "MalformedInput");
    }
}

TEST_CASE("run over a 30-card deck yields 30 rounds") {
    auto dir = scratch_dir("cli-run30");
    write_deck(dir / "in.json", 30, "numbers");
    auto o = invoke({"run", "--deck", (dir / "in.json").string(), "--player", "sim:random", "--judge", "sim:rule",
                     "--output-dir", (dir / "out").string(), "--parallelism", "4"});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    auto report = nlohmann::json::parse(read_text_file(dir / "out" / "report.json"));
    CHECK(report["per_round"].size() == 30);
    CHECK(report["N"] == 30);
    CHECK(report["params"]["t_rand"] == 15.5);
    auto lines = read_text_file(dir / "out" / "transcripts.jsonl");
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 30);
}

TEST_CASE("run preconditions") {
    auto dir = scratch_dir("cli-run-pre");
    auto args = sim_run_args(dir);
    args.insert(args.end(), {"--regime", "knowledge_driven"});
    auto o = invoke(args);
    CHECK(o.code == 1);
    CHECK(error_code(o) == "MissingBackground");

    args = sim_run_args(dir);
    args.insert(args.end(), {"--parallelism", "65"});
    CHECK(invoke(args).code == 1);

    // Provider endpoints fail fast when the key is missing.
    unsetenv("GUESSARENA_CLI_TEST_KEY");
    args = sim_run_args(dir);
    auto judge = std::find(args.begin(), args.end(), "sim:rule");
    *judge = R"({"base_url":"http://127.0.0.1:9/v1","model_id":"m","api_key_env":"GUESSARENA_CLI_TEST_KEY"})";
    o = invoke(args);
    CHECK(o.code == 1);
    CHECK(error_code(o) == "ProviderError.auth");
    CHECK_FALSE(std::filesystem::exists(dir / "transcripts.jsonl"));
}

TEST_CASE("run with replayed LLM agents") {
    auto dir = scratch_dir("cli-replay");
    write_deck(dir / "deck.json", 3, "numbers");
    // The player sees the dialog history in its user message; the judge sees the target in its system message.
    write_text_file(dir / "player.json", R"({"rules":[
        {"match":"Player: Is it an odd item?","reply":"FINAL GUESS: item 2"}],
        "fallback":"Is it an odd item?"})");
    write_text_file(dir / "judge.json", R"({"rules":[
        {"match":"FINAL GUESS","reply":"[End]"}],
        "fallback":"[No]"})");
    auto o = invoke({"run", "--deck", (dir / "deck.json").string(), "--player", "replay:" + (dir / "player.json").string(),
                     "--judge", "replay:" + (dir / "judge.json").string(), "--output-dir", (dir / "out").string(),
                     "--regime", "cot", "--player-label", "replayed"});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    auto report = nlohmann::json::parse(read_text_file(dir / "out" / "report.json"));
    CHECK(report["player"] == "replayed");
    CHECK(report["regime"] == "cot");
    CHECK(report["E"].get<double>() == doctest::Approx(1.0 / 3));
}

TEST_CASE("agreement on the 1200-row fixture") {
    auto dir = scratch_dir("cli-agree");
    std::ofstream j(dir / "judgments.csv"), g(dir / "gold.csv");
    j << "instance_id,judge_id,token\n";
    g << "instance_id,token\n";
    for (int i = 0; i < 1200; ++i) {
        g << "q" << i << ",Yes\n";
        j << "q" << i << ",gpt-4o," << (i < 1108 ? "Yes" : "No") << "\n";
        j << "q" << i << ",other," << (i % 2 ? "Yes" : "No") << "\n";
    }
    j.close();
    g.close();
    auto o = invoke({"agreement", "--judgments", (dir / "judgments.csv").string(), "--gold",
                     (dir / "gold.csv").string(), "--reference", "gpt-4o"});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    CHECK(o.out.find("\"gpt-4o\": 92.33") != std::string::npos);
    auto rep = nlohmann::json::parse(o.out);
    CHECK(rep["per_judge"]["other"] == 50.0);
    CHECK(rep["pairwise"]["gpt-4o"] == 100.0);
    CHECK(rep["instances"] == 1200);

    auto missing = invoke({"agreement", "--judgments", (dir / "nope.csv").string(), "--gold",
                           (dir / "gold.csv").string(), "--reference", "gpt-4o"});
    CHECK(missing.code == 1);
}

TEST_CASE("report-merge builds a model x domain grid") {
    auto dir = scratch_dir("cli-merge");
    write_deck(dir / "finance.json", 4, "finance");
    write_deck(dir / "health.json", 4, "health");
    std::vector<std::string> runs;
    for (auto player : {"sim:random", "sim:halving"}) {
        for (auto domain : {"finance", "health"}) {
            auto out = dir / (std::string(player).substr(4) + "-" + domain);
            auto o = invoke({"run", "--deck", (dir / (std::string(domain) + ".json")).string(), "--player", player,
                             "--judge", "sim:rule", "--output-dir", out.string()});
            REQUIRE_MESSAGE(o.code == 0, o.err);
            runs.push_back(out.string());
        }
    }
    std::vector<std::string> args{"report-merge"};
    args.insert(args.end(), runs.begin(), runs.end());
    args.insert(args.end(), {"--output-dir", (dir / "merged").string()});
    auto o = invoke(args);
    REQUIRE_MESSAGE(o.code == 0, o.err);
    CHECK(o.out.find("| Model | finance | health | Avg. |") == 0);
    CHECK(std::count(o.out.begin(), o.out.end(), '\n') == 4);
    CHECK(o.out.find("| sim:random |") != std::string::npos);
    CHECK(o.out.find("| sim:halving |") != std::string::npos);
    CHECK(read_text_file(dir / "merged" / "report.md") == o.out);

    CHECK(invoke({"report-merge", (dir / "missing.json").string()}).code == 1);
}

TEST_CASE("config files") {
    auto dir = scratch_dir("cli-config");
    write_text_file(dir / "run.json", nlohmann::json{{"seed", 11},
                                                     {"run",
                                                      {{"deck", (fixtures() / "attr8_deck.json").string()},
                                                       {"player", "sim:halving"},
                                                       {"judge", "sim:rule"},
                                                       {"output-dir", (dir / "json").string()}}}}
                                          .dump());
    auto o = invoke({"--config", (dir / "run.json").string(), "run"});
    REQUIRE_MESSAGE(o.code == 0, o.err);

    write_text_file(dir / "run.toml", "seed = 11\n[run]\ndeck = \"" + (fixtures() / "attr8_deck.json").string() +
                                          "\"\nplayer = \"sim:halving\"\njudge = \"sim:rule\"\noutput-dir = \"" +
                                          (dir / "toml").string() + "\"\n");
    o = invoke({"--config", (dir / "run.toml").string(), "run"});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    CHECK(read_text_file(dir / "json" / "report.json") == read_text_file(dir / "toml" / "report.json"));

    // Flags override file values.
    o = invoke({"--config", (dir / "run.json").string(), "run", "--output-dir", (dir / "flag").string()});
    REQUIRE(o.code == 0);
    CHECK(std::filesystem::exists(dir / "flag" / "report.json"));
}

TEST_CASE("usage errors") {
    auto o = invoke({"frobnicate"});
    CHECK(o.code == 1);
    CHECK(error_code(o) == "UsageError");
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
}
