#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "guessarena/analysis.hpp"
#include "guessarena/cli.hpp"
#include "guessarena/deck_io.hpp"
#include "guessarena/deckgen.hpp"
#include "guessarena/ingest.hpp"
#include "guessarena/random.hpp"
#include "guessarena/report.hpp"
#include "guessarena/transcript.hpp"

#ifndef GUESSARENA_CODE_VERSION
#define GUESSARENA_CODE_VERSION "guessarena-dev"
#endif

namespace guessarena::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Stream ids for derive_seed so unrelated consumers never share a sequence.
constexpr std::uint64_t kTRandStream = 0x7452616e64ULL;

int fail(std::ostream& err, std::string_view code, std::string_view message) {
    ordered_json j;
    j["error"] = {{"code", code}, {"message", message}};
    err << j.dump() << '\n';
    return 1;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ProviderError& e) {
        return fail(err, std::string("ProviderError.") + std::string(to_string(e.kind())), e.what());
    } catch (const Error& e) {
        return fail(err, to_string(e.code()), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(err, "FilesystemError", e.what());
    } catch (const std::exception& e) {
        return fail(err, "InternalError", e.what());
    }
}

void log(const Globals& g, std::ostream& err, const std::string& msg) {
    if (g.verbose) err << "[guessarena] " << msg << '\n';
}

json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedInput, what + ": " + e.what());
    }
}

json endpoint_json(const std::string& spec) {
    const auto t = trim(spec);
    if (t.starts_with("{")) return parse_json_text(t, "inline endpoint");
    return parse_json_text(read_text_file(t), t);
}

bool is_sim(const std::string& spec) { return spec.starts_with("sim:"); }

// Endpoints that talk to a provider must have their key before anything runs.
void require_credentials(const std::string& spec) {
    if (spec.empty() || is_sim(spec) || spec.starts_with("replay:")) return;
    auto ep = agents::endpoint_from_json(endpoint_json(spec));
    if (!ep.api_key_env.empty() && std::getenv(ep.api_key_env.c_str()) == nullptr)
        throw ProviderError(ProviderErrorKind::Auth, "environment variable " + ep.api_key_env + " is not set");
}

std::string now_timestamp() { return format_timestamp(std::chrono::system_clock::now()); }

std::vector<std::string> read_seed_terms(const std::filesystem::path& path) {
    std::vector<std::string> terms;
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (!t.empty() && !t.starts_with("#")) terms.push_back(std::move(t));
    }
    return terms;
}

void write_report(const std::filesystem::path& dir, const metrics::ReportFile& rf) {
    write_text_file(dir / "report.json", metrics::to_json(rf).dump(2) + "\n");
    write_text_file(dir / "report.md", metrics::render_markdown(rf));
}

}  // namespace

std::string code_version() { return GUESSARENA_CODE_VERSION; }

std::shared_ptr<agents::ChatClient> make_chat_client(const std::string& spec) {
    if (spec.starts_with("replay:")) {
        auto path = spec.substr(7);
        auto j = parse_json_text(read_text_file(path), path);
        if (j.is_array()) return std::make_shared<agents::ReplayChatClient>(j.get<std::vector<std::string>>());
        if (!j.is_object() || !j.contains("rules"))
            throw Error(ErrorCode::MalformedInput, path + ": replay file needs a \"rules\" array or a list of replies");
        std::vector<agents::MatchingChatClient::Rule> rules;
        for (const auto& r : j.at("rules"))
            rules.push_back({r.at("match").get<std::string>(), r.at("reply").get<std::string>()});
        return std::make_shared<agents::MatchingChatClient>(std::move(rules), j.value("fallback", std::string{}));
    }
    if (is_sim(spec)) throw Error(ErrorCode::InvalidArgument, "'" + spec + "' is not a chat endpoint");
    return std::make_shared<agents::HttpChatClient>(agents::endpoint_from_json(endpoint_json(spec)));
}

std::shared_ptr<agents::Embedder> make_embedder(const std::string& spec) {
    if (spec == "sim:hash") return std::make_shared<agents::HashingEmbedder>();
    if (is_sim(spec) || spec.starts_with("replay:"))
        throw Error(ErrorCode::InvalidArgument, "'" + spec + "' is not an embedding endpoint");
    return std::make_shared<agents::HttpEmbedder>(agents::endpoint_from_json(endpoint_json(spec)));
}

metrics::MetricParams make_params(const ScoreFlags& flags, int deck_size, std::uint64_t seed) {
    metrics::MetricParams p;
    p.w1 = flags.w1;
    p.w2 = flags.w2;
    p.w3 = flags.w3;
    p.alpha = flags.alpha;
    p.t_rand_mode = engine::t_rand_mode_from_string(flags.t_rand_mode);
    p.aggregation = metrics::aggregation_from_string(flags.aggregation);
    if (flags.t_rand_trials < 1) throw Error(ErrorCode::InvalidParams, "--t-rand-trials must be >= 1");
    p.t_rand_value =
        engine::measure_t_rand(deck_size, p.t_rand_mode, flags.t_rand_trials, derive_seed(seed, kTRandStream));
    p.validate();
    return p;
}

int cmd_build_deck(const BuildDeckArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        deckgen::FilterParams filter{a.tau_lower, a.tau_upper};
        filter.validate();
        if (a.max_keywords < 1) throw Error(ErrorCode::InvalidArgument, "--max-keywords must be >= 1");
        if (a.workers < 1) throw Error(ErrorCode::InvalidArgument, "--workers must be >= 1");
        DomainSpec domain{a.domain_name, a.domain_desc, {}};
        if (a.seed_terms) domain.seed_terms = read_seed_terms(*a.seed_terms);
        domain.validate();

        auto docs = ingest::load_directory(a.docs);
        if (docs.empty()) throw Error(ErrorCode::InvalidArgument, "no documents in " + a.docs.string());
        log(g, err, "loaded " + std::to_string(docs.size()) + " documents");

        auto chat = make_chat_client(a.chat_endpoint);
        auto embedder = make_embedder(a.embed_endpoint);

        deckgen::BuildOptions opts;
        opts.max_keywords = a.max_keywords;
        opts.filter = filter;
        opts.clusters = a.clusters;
        opts.deck_size = a.deck_size;
        opts.seed = g.seed;
        opts.workers = a.workers;
        opts.created_at = a.created_at.empty() ? now_timestamp() : a.created_at;
        deckgen::BuildSummary summary;
        Deck deck = deckgen::build_deck(domain, docs, *chat, *embedder, opts, &summary);

        auto j = deck_to_json(deck);
        j["provenance"] = {{"seed", g.seed},
                           {"code_version", code_version()},
                           {"params",
                            {{"max_keywords", a.max_keywords},
                             {"clusters", a.clusters},
                             {"deck_size", a.deck_size},
                             {"chat_model", chat->id()}}}};
        auto path = a.out.empty() ? a.output_dir / "deck.json" : a.out;
        write_text_file(path, j.dump(2) + "\n");

        ordered_json s;
        s["documents"] = summary.documents;
        s["keywords_extracted"] = summary.extracted;
        s["kept_after_filter"] = summary.kept;
        s["clusters"] = summary.non_empty_clusters;
        s["deck_size"] = deck.size();
        s["deck_digest"] = deck.digest();
        s["out"] = path.string();
        out << s.dump() << '\n';
        return 0;
    });
}

int cmd_run(const RunArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (a.parallelism < 1 || a.parallelism > 64)
            throw Error(ErrorCode::InvalidArgument, "--parallelism must be in [1, 64]");
        if (a.player.empty() || a.judge.empty())
            throw Error(ErrorCode::InvalidArgument, "--player and --judge are required");
        Deck deck = load_deck(a.deck);
        a.game.validate();
        const auto regime = agents::regime_from_string(a.regime);
        const int max_turns = a.game.effective_max_turns(deck);
        const auto params = make_params(a.scoring, static_cast<int>(deck.size()), g.seed);

        require_credentials(a.player);
        require_credentials(a.judge);
        require_credentials(a.background_endpoint);

        // Players and judges shared across rounds.
        std::shared_ptr<agents::ChatClient> player_chat, judge_chat;
        if (!is_sim(a.player)) player_chat = make_chat_client(a.player);
        if (!is_sim(a.judge)) judge_chat = make_chat_client(a.judge);
        if (is_sim(a.player) && a.player != "sim:halving" && a.player != "sim:random")
            throw Error(ErrorCode::InvalidArgument, "unknown simulated player: " + a.player);
        if (is_sim(a.judge) && a.judge != "sim:rule")
            throw Error(ErrorCode::InvalidArgument, "unknown simulated judge: " + a.judge);

        agents::PlayerContext ctx;
        ctx.deck_listing = deck.card_texts();
        ctx.regime = regime;
        if (regime == agents::PromptRegime::KnowledgeDriven && player_chat) {
            if (a.background) {
                ctx.knowledge_background = read_text_file(*a.background);
            } else {
                std::shared_ptr<agents::ChatClient> bg;
                if (!a.background_endpoint.empty()) bg = make_chat_client(a.background_endpoint);
                else if (judge_chat) bg = judge_chat;
                if (!bg)
                    throw Error(ErrorCode::MissingBackground,
                                "knowledge_driven needs --background or --background-endpoint");
                log(g, err, "generating knowledge background");
                ctx.knowledge_background = agents::generate_knowledge_background(deck, *bg);
            }
            ctx.validate();
        } else if (regime == agents::PromptRegime::KnowledgeDriven && !a.background && a.background_endpoint.empty()) {
            throw Error(ErrorCode::MissingBackground, "knowledge_driven needs --background or --background-endpoint");
        }

        const std::string sentinel = a.game.final_guess_sentinel;
        engine::PlayerFactory player_factory = [&](const Card&, std::size_t, std::uint64_t seed)
            -> std::unique_ptr<agents::Player> {
            if (a.player == "sim:halving") return std::make_unique<agents::HalvingOraclePlayer>(deck, sentinel);
            if (a.player == "sim:random") return std::make_unique<agents::RandomGuesserPlayer>(deck, seed, sentinel);
            return std::make_unique<agents::LlmPlayer>(player_chat, ctx);
        };
        engine::JudgeFactory judge_factory = [&](const Card& target, std::size_t) -> std::unique_ptr<agents::Judge> {
            if (a.judge == "sim:rule") return std::make_unique<agents::RuleJudge>(deck, target, sentinel);
            return std::make_unique<agents::LlmJudge>(judge_chat, deck, target);
        };

        std::string clock = a.clock;
        if (clock == "auto") clock = is_sim(a.player) && is_sim(a.judge) ? "logical" : "system";
        if (clock != "logical" && clock != "system")
            throw Error(ErrorCode::InvalidArgument, "--clock must be auto, logical or system");
        engine::RunOptions opts;
        opts.parallelism = a.parallelism;
        if (clock == "logical")
            opts.clock_factory = [](std::size_t) {
                return std::make_unique<engine::LogicalClock>(std::chrono::system_clock::time_point{},
                                                              std::chrono::milliseconds{1});
            };

        log(g, err, "running " + std::to_string(deck.size()) + " rounds");
        auto results = engine::run_deck(deck, player_factory, judge_factory, a.game, g.seed, opts);

        const std::string label = a.player_label.empty() ? a.player : a.player_label;
        std::vector<engine::TranscriptRecord> records;
        for (auto& r : results) {
            engine::TranscriptRecord rec;
            rec.round = std::move(r);
            rec.deck_digest = deck.digest();
            rec.regime = std::string(agents::to_string(regime));
            rec.max_turns = max_turns;
            rec.deck_size = static_cast<int>(deck.size());
            rec.player = label;
            rec.domain = deck.domain().name;
            rec.provenance = {g.seed, code_version()};
            records.push_back(std::move(rec));
        }
        auto rf = metrics::score_transcripts(records, params);

        // One writer for every artifact keeps the output tree deterministic.
        write_text_file(a.output_dir / "deck.json", read_text_file(a.deck));
        write_text_file(a.output_dir / "transcripts.jsonl", engine::to_jsonl(records));
        write_report(a.output_dir, rf);

        std::size_t errors = 0;
        for (const auto& rec : records) errors += rec.round.terminated_by == Termination::ProtocolError ? 1 : 0;
        ordered_json s{{"rounds", records.size()},
                       {"protocol_errors", errors},
                       {"E", rf.report.E},
                       {"F_mean", rf.report.F_mean},
                       {"K_mean", rf.report.K_mean},
                       {"score", rf.report.score},
                       {"output_dir", a.output_dir.string()}};
        out << s.dump() << '\n';
        return 0;
    });
}

int cmd_score(const ScoreArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto records = engine::read_transcripts(a.transcripts);
        if (records.empty()) throw Error(ErrorCode::EmptyResults, "no transcript records in " + a.transcripts.string());
        // t_rand is recomputed from the run's own seed so empirical mode reproduces.
        const auto& first = records.front();
        const int deck_size = first.deck_size > 0 ? first.deck_size : static_cast<int>(records.size());
        auto params = make_params(a.scoring, deck_size, first.provenance.seed);
        auto rf = metrics::score_transcripts(records, params);
        log(g, err, "scored " + std::to_string(records.size()) + " rounds");
        const auto text = metrics::to_json(rf).dump(2) + "\n";
        if (!a.output_dir.empty()) write_report(a.output_dir, rf);
        out << text;
        return 0;
    });
}

int cmd_agreement(const AgreementArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::istringstream jin(read_text_file(a.judgments)), gin(read_text_file(a.gold));
        auto judgments = analysis::read_judgments_csv(jin);
        auto gold = analysis::read_gold_csv(gin);
        log(g, err, std::to_string(judgments.size()) + " judgments, " + std::to_string(gold.size()) + " gold labels");
        auto rep = analysis::analyze(judgments, gold, a.reference_judge);
        // Rates are reported to two decimals.
        auto r2 = [](double v) { return std::round(v * 100.0) / 100.0; };
        ordered_json j;
        j["per_judge"] = ordered_json::object();
        for (const auto& [id, rate] : rep.per_judge) j["per_judge"][id] = r2(rate);
        j["majority"] = r2(rep.majority);
        j["pairwise"] = ordered_json::object();
        for (const auto& [id, rate] : rep.pairwise) j["pairwise"][id] = r2(rate);
        j["reference_judge"] = rep.reference_judge;
        j["instances"] = rep.instances;
        j["provenance"] = {{"code_version", code_version()}};
        const auto text = j.dump(2) + "\n";
        if (!a.output_dir.empty()) write_text_file(a.output_dir / "agreement.json", text);
        out << text;
        return 0;
    });
}

int cmd_report_merge(const MergeArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (a.reports.empty()) throw Error(ErrorCode::InvalidArgument, "no reports given");
        std::vector<metrics::ReportFile> reports;
        for (const auto& p : a.reports)
            reports.push_back(metrics::load_report(std::filesystem::is_directory(p) ? p / "report.json" : p));
        log(g, err, "merging " + std::to_string(reports.size()) + " reports");
        auto md = metrics::render_merged_markdown(reports);
        if (!a.output_dir.empty()) write_text_file(a.output_dir / "report.md", md);
        out << md;
        return 0;
    });
}

}  // namespace guessarena::cli
