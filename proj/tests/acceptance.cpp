// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "guessarena/agents.hpp"
#include "guessarena/analysis.hpp"
#include "guessarena/cli.hpp"
#include "guessarena/deck_io.hpp"
#include "guessarena/deckgen.hpp"
#include "guessarena/engine.hpp"
#include "guessarena/metrics.hpp"
#include "guessarena/random.hpp"
#include "support.hpp"

using namespace guessarena;

namespace {

struct Check {
    std::string detail;
    bool ok = true;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

int failures = 0;

void criterion(int n, const std::string& title, double budget_ms, const std::function<void(Check&)>& body) {
    Check c;
    auto start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (budget_ms > 0) c.expect(ms < budget_ms, "took " + std::to_string(ms) + " ms");
    failures += c.ok ? 0 : 1;
    std::printf("criterion %2d %s %s (%.1f ms)%s%s\n", n, c.ok ? "PASS" : "FAIL", title.c_str(), ms,
                c.detail.empty() ? "" : ": ", c.detail.c_str());
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

engine::RunOptions logical_clock() {
    engine::RunOptions opts;
    opts.clock_factory = [](std::size_t) { return std::make_unique<engine::LogicalClock>(); };
    return opts;
}

// Adjusted Rand index between two labelings.
double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<std::pair<int, int>, double> n;
    std::map<int, double> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        n[{a[i], b[i]}] += 1;
        ra[a[i]] += 1;
        rb[b[i]] += 1;
    }
    auto c2 = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sa = 0, sb = 0;
    for (auto& [k, v] : n) index += c2(v);
    for (auto& [k, v] : ra) sa += c2(v);
    for (auto& [k, v] : rb) sb += c2(v);
    double expected = sa * sb / c2(static_cast<double>(a.size()));
    return (index - expected) / ((sa + sb) / 2 - expected);
}

class TableEmbedder : public agents::Embedder {
public:
    std::map<std::string, std::vector<double>> table;
    std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override {
        std::vector<std::vector<double>> out;
        for (const auto& t : texts) out.push_back(table.at(t));
        return out;
    }
    std::string id() const override { return "table"; }
};

}  // namespace

int main() {
    using metrics::knowledge_applicability;
    using metrics::reasoning_efficiency;

    criterion(1, "metric formula suite", 50, [](Check& c) {
        c.expect(reasoning_efficiency(15.5, 15.5, 4) == 0.5, "F(15.5, 15.5) != 0.5");
        c.expect(near(reasoning_efficiency(31, 15.5, 4), 0.01798621, 1e-6), "F(31, 15.5)");
        c.expect(near(knowledge_applicability(31, 15.5), 0.36787944, 1e-6), "K(31, 15.5)");
        c.expect(near(metrics::composite_score(1, 0.5, 1, metrics::MetricParams{}), 0.8333333, 1e-6), "composite");
    });

    criterion(2, "logistic symmetry over 1000 random pairs", 100, [](Check& c) {
        Rng rng(20240601);
        for (int i = 0; i < 1000; ++i) {
            double tr = 1.0 + rng.uniform01() * 100;
            double t = 1.0 + rng.uniform01() * (2 * tr - 2);
            double s = reasoning_efficiency(t, tr) + reasoning_efficiency(2 * tr - t, tr);
            if (!near(s, 1.0, 1e-9)) c.expect(false, "F(t) + F(2tr - t) = " + std::to_string(s));
        }
    });

    criterion(3, "monotonicity of F and K", 50, [](Check& c) {
        for (int n : {2, 8, 30}) {
            double tr = (n + 1) / 2.0;
            for (int t = 1; t < 2 * n; ++t) {
                c.expect(reasoning_efficiency(t + 1, tr) < reasoning_efficiency(t, tr), "F not strictly decreasing");
                c.expect(knowledge_applicability(t + 1, tr) <= knowledge_applicability(t, tr), "K increasing");
            }
            for (int t = 1; t <= tr; ++t) c.expect(knowledge_applicability(t, tr) == 1.0, "K != 1 below t_rand");
        }
    });

    criterion(4, "halving oracle on the 8-card attribute deck", 1000, [](Check& c) {
        auto deck = guessarena::testing::attribute_deck(3);
        engine::PlayerFactory pf = [&](const Card&, std::size_t, std::uint64_t) {
            return std::make_unique<agents::HalvingOraclePlayer>(deck);
        };
        engine::JudgeFactory jf = [&](const Card& target, std::size_t) {
            return std::make_unique<agents::RuleJudge>(deck, target);
        };
        auto results = engine::run_deck(deck, pf, jf, engine::GameConfig{}, 1, logical_clock());
        c.expect(results.size() == 8, "round count");
        for (const auto& r : results) {
            c.expect(r.correct, "round " + r.round_id + " incorrect");
            c.expect(r.t_model == 4, "round " + r.round_id + " t_model " + std::to_string(r.t_model));
        }
        c.expect(metrics::reasoning_accuracy(results) == 1.0, "E != 1");
    });

    criterion(5, "empirical random baseline near 15.5", 5000, [](Check& c) {
        double t = engine::measure_t_rand(30, engine::TRandMode::Empirical, 10000, 42);
        c.expect(near(t, 15.5, 0.3), "measured " + std::to_string(t));
        c.expect(engine::measure_t_rand(30, engine::TRandMode::Analytic, 0, 0) == 15.5, "analytic");
    });

    criterion(6, "protocol state machine", 1000, [](Check& c) {
        auto deck = guessarena::testing::attribute_deck(2);
        const Card target = deck.cards()[2];
        engine::GameConfig cfg;

        {
            agents::HalvingOraclePlayer p(deck);
            agents::RuleJudge j(deck, target);
            auto r = engine::play_round(deck, target, p, j, cfg);
            int ends = 0;
            for (std::size_t i = 0; i < r.transcript.size(); ++i) {
                c.expect(r.transcript[i].index == static_cast<int>(i) + 1, "turn indices");
                ends += r.transcript[i].judge_token == JudgeToken::End ? 1 : 0;
                c.expect(r.transcript[i].is_final_guess == (i + 1 == r.transcript.size()), "final flag placement");
            }
            c.expect(ends == 1 && r.transcript.back().judge_token == JudgeToken::End, "single End at the end");
            c.expect(r.terminated_by == Termination::FinalGuess && r.correct, "oracle round");
        }
        {
            agents::ScriptedPlayer p(std::vector<std::string>(10, "attribute 1?"));
            agents::RuleJudge j(deck, target);
            auto r = engine::play_round(deck, target, p, j, cfg);
            c.expect(r.terminated_by == Termination::MaxTurns, "budget exhaustion cause");
            c.expect(r.t_model == 4 && r.transcript.size() == 4 && p.calls() == 4, "exactly max_turns messages");
            c.expect(!r.correct, "exhausted round marked correct");
        }
        {
            agents::ScriptedPlayer p({"attribute 0?"});
            agents::ScriptedJudge j({"[Yes] no wait [No]"});
            cfg.judge_retries = 2;
            auto r = engine::play_round(deck, target, p, j, cfg);
            c.expect(r.terminated_by == Termination::ProtocolError, "ambiguous judge cause");
            c.expect(j.calls() == 3, "judge attempts " + std::to_string(j.calls()));
            c.expect(r.error_detail == "unparsable_judge_reply", "error detail");
        }
    });

    criterion(7, "spectral clustering recovers orthogonal blocks", 1000, [](Check& c) {
        deckgen::EmbeddingMatrix m;
        m.keywords = {"a", "b", "c", "d", "e", "f"};
        m.vectors = {{1, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, 1, 0}, {0, 1, 0}};
        std::vector<int> truth{0, 0, 1, 0, 1, 1};
        auto first = deckgen::cluster_keywords(m, 2, 42);
        c.expect(adjusted_rand(first.assignments, truth) == 1.0, "ARI below 1");
        for (int i = 0; i < 5; ++i)
            c.expect(deckgen::cluster_keywords(m, 2, 42).assignments == first.assignments, "not deterministic");
    });

    criterion(8, "filter boundaries are exclusive", 100, [](Check& c) {
        deckgen::FilterParams p;
        c.expect(!deckgen::within_band(0.35, p) && !deckgen::within_band(0.9, p), "boundary kept");
        c.expect(deckgen::within_band(0.5, p), "interior dropped");
        TableEmbedder e;
        e.table["topic"] = {1, 0, 0, 0, 0};
        e.table["low"] = {7, 18, 5, 1, 1};  // cosine 7/20
        e.table["high"] = {9, 4, 1, 1, 1};  // cosine 9/10
        e.table["mid"] = {1, 1, 1, 1, 0};   // cosine 1/2
        deckgen::KeywordSet k;
        for (auto s : {"low", "high", "mid"}) k.add(s, "doc");
        c.expect(deckgen::cosine(e.table["low"], e.table["topic"]) == 0.35, "fixture cosine 0.35");
        c.expect(deckgen::cosine(e.table["high"], e.table["topic"]) == 0.9, "fixture cosine 0.9");
        auto kept = deckgen::filter_keywords(k, "topic", p, e);
        c.expect(kept.keywords == std::vector<std::string>{"mid"}, "kept set");
    });

    criterion(9, "stratified sampling", 100, [](Check& c) {
        deckgen::DeckMeta meta{DomainSpec{"d", "x", {}}, "enc", {}, ""};
        auto counts = [](const Deck& d) {
            std::map<int, int> per;
            for (const auto& card : d.cards()) ++per[*card.cluster_id()];
            return per;
        };
        deckgen::KeywordSet big;
        deckgen::ClusterModel m10;
        m10.k = 10;
        for (int i = 0; i < 100; ++i) {
            big.add("kw" + std::to_string(i), "doc");
            m10.assignments.push_back(i / 10);
        }
        auto per = counts(deckgen::sample_deck(m10, big, 30, 3, meta));
        c.expect(per.size() == 10, "clusters represented");
        for (auto& [id, n] : per) c.expect(n == 3, "cluster " + std::to_string(id) + " has " + std::to_string(n));

        deckgen::KeywordSet small;
        for (int i = 0; i < 6; ++i) small.add("s" + std::to_string(i), "doc");
        deckgen::ClusterModel m2;
        m2.k = 2;
        m2.assignments = {0, 0, 0, 0, 0, 1};
        auto skew = counts(deckgen::sample_deck(m2, small, 4, 3, meta));
        c.expect(skew[0] == 3 && skew[1] == 1, "skewed split");
    });

    criterion(10, "end-to-end determinism of run", 0, [](Check& c) {
        auto a = guessarena::testing::scratch_dir("acceptance-a");
        auto b = guessarena::testing::scratch_dir("acceptance-b");
        for (const auto& dir : {a, b}) {
            std::ostringstream out, err;
            int code = cli::run({"run", "--deck", (guessarena::testing::fixtures() / "attr8_deck.json").string(),
                                 "--player", "sim:halving", "--judge", "sim:rule", "--seed", "5", "--parallelism", "3",
                                 "--output-dir", dir.string()},
                                out, err);
            c.expect(code == 0, "run exit " + std::to_string(code) + " " + err.str());
        }
        for (auto f : {"transcripts.jsonl", "report.json"})
            c.expect(read_text_file(a / f) == read_text_file(b / f), std::string(f) + " differs");
        auto report = nlohmann::json::parse(read_text_file(a / "report.json"));
        c.expect(report["E"] == 1.0, "E != 1");
    });

    criterion(11, "agreement fixture and majority tie", 1000, [](Check& c) {
        std::vector<analysis::GoldLabel> gold;
        std::vector<analysis::JudgmentRecord> judge;
        for (int i = 0; i < 1200; ++i) {
            auto id = std::to_string(i);
            gold.push_back({id, i % 3 ? JudgeToken::Yes : JudgeToken::No});
            auto token = gold.back().token;
            if (i % 13 == 0 && i < 13 * 92) token = token == JudgeToken::Yes ? JudgeToken::Invalid : JudgeToken::Yes;
            judge.push_back({id, "gpt-4o", token});
        }
        double rate = analysis::agreement_rate(judge, gold);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", rate);
        c.expect(std::string(buf) == "92.33", std::string("rate ") + buf);

        std::vector<analysis::JudgmentRecord> tie{{"x", "a", JudgeToken::Yes}, {"x", "b", JudgeToken::No}};
        auto v = analysis::majority_vote(tie);
        c.expect(v.size() == 1 && !v[0].token.has_value(), "tie did not abstain");
        std::vector<analysis::GoldLabel> g{{"x", JudgeToken::Yes}};
        c.expect(analysis::agreement_rate(v, g) == 0.0, "abstain not counted as disagreement");
    });

    criterion(12, "prompt fidelity", 100, [](Check& c) {
        auto deck = guessarena::testing::make_deck({"black hole", "quasar", "pulsar"});
        auto judge = agents::render_judge_prompt(deck, Card("quasar"));
        c.expect(judge.find("You can only use four standard responses: \"[Yes]\", \"[No]\", \"[Invalid]\", and "
                            "\"[End]\".") != std::string::npos,
                 "judge rule sentence");
        agents::PlayerContext ctx{deck.card_texts(), agents::PromptRegime::Cot, std::nullopt};
        c.expect(agents::render_player_prompt(ctx).find("Step-by-Step Reasoning") != std::string::npos, "cot");
        std::string background;
        for (int i = 0; i < 260; ++i) background += "fact" + std::to_string(i) + " ";
        ctx.regime = agents::PromptRegime::KnowledgeDriven;
        ctx.knowledge_background = background;
        c.expect(agents::render_player_prompt(ctx).find(background) != std::string::npos, "background verbatim");
    });

    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
