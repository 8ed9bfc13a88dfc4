#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "guessarena/cli.hpp"

namespace guessarena::cli {

namespace {

// Config files are TOML (CLI11's native reader) or a JSON object. Nested
// JSON objects map to subcommand sections, like [run] in TOML.
class JsonOrTomlConfig final : public CLI::ConfigTOML {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
        auto first = text.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || text[first] != '{') {
            std::istringstream in(text);
            return CLI::ConfigTOML::from_config(in);
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw CLI::ConversionError("config", e.what());
        }
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static void flatten(const nlohmann::json& obj, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) {
                auto p = parents;
                p.push_back(key);
                flatten(value, p, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array())
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            else
                item.inputs.push_back(scalar(value));
            items.push_back(std::move(item));
        }
    }
};

void add_score_flags(CLI::App* cmd, ScoreFlags& s) {
    cmd->add_option("--w1", s.w1, "Weight of accuracy E")->capture_default_str();
    cmd->add_option("--w2", s.w2, "Weight of efficiency F")->capture_default_str();
    cmd->add_option("--w3", s.w3, "Weight of knowledge applicability K")->capture_default_str();
    cmd->add_option("--alpha", s.alpha, "Steepness of the efficiency penalty")->capture_default_str();
    cmd->add_option("--t-rand-mode", s.t_rand_mode, "Random baseline: analytic or empirical")
        ->check(CLI::IsMember({"analytic", "empirical"}))
        ->capture_default_str();
    cmd->add_option("--t-rand-trials", s.t_rand_trials, "Trials for the empirical baseline")->capture_default_str();
    cmd->add_option("--aggregation", s.aggregation, "per_round or mean_t_model")
        ->check(CLI::IsMember({"per_round", "mean_t_model"}))
        ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"GuessArena: evaluate chat models with a guessing game over domain decks", "guessarena"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<JsonOrTomlConfig>());
    app.set_config("--config", "", "Read options from a TOML or JSON file; flags override it");

    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
    app.add_flag("--verbose", g.verbose, "Progress messages on stderr");

    BuildDeckArgs bd;
    std::string seed_terms;
    auto* build = app.add_subcommand("build-deck", "Build a card deck from a document corpus");
    build->add_option("--docs", bd.docs, "Directory of source documents")->required();
    build->add_option("--domain-name", bd.domain_name, "Domain name")->required();
    build->add_option("--domain-desc", bd.domain_desc, "Domain description")->required();
    build->add_option("--seed-terms", seed_terms, "File with one known domain term per line");
    build->add_option("--max-keywords", bd.max_keywords, "Keywords requested per document")->capture_default_str();
    build->add_option("--tau-lower", bd.tau_lower, "Lower similarity bound (exclusive)")->capture_default_str();
    build->add_option("--tau-upper", bd.tau_upper, "Upper similarity bound (exclusive)")->capture_default_str();
    build->add_option("--clusters", bd.clusters, "Number of keyword clusters")->capture_default_str();
    build->add_option("--deck-size", bd.deck_size, "Cards in the deck")->capture_default_str();
    build->add_option("--out", bd.out, "Deck path (default <output-dir>/deck.json)");
    build->add_option("--output-dir", bd.output_dir, "Output directory")->capture_default_str();
    build->add_option("--chat-endpoint", bd.chat_endpoint, "Extraction model: endpoint JSON or replay:<file>")
        ->required();
    build->add_option("--embed-endpoint", bd.embed_endpoint, "Encoder: endpoint JSON or sim:hash")->required();
    build->add_option("--created-at", bd.created_at, "Timestamp stored in the deck (default now)");
    build->add_option("--workers", bd.workers, "Concurrent extraction requests")->capture_default_str();

    RunArgs ra;
    std::string background;
    auto* runc = app.add_subcommand("run", "Play every card of a deck and score the model");
    runc->add_option("--deck", ra.deck, "Deck JSON")->required();
    runc->add_option("--player", ra.player, "Player: sim:halving, sim:random, replay:<file> or endpoint")->required();
    runc->add_option("--judge", ra.judge, "Judge: sim:rule, replay:<file> or endpoint")->required();
    runc->add_option("--player-label", ra.player_label, "Model name used in reports");
    runc->add_option("--regime", ra.regime, "Prompt regime")
        ->check(CLI::IsMember({"basic", "cot", "knowledge_driven"}))
        ->capture_default_str();
    runc->add_option("--background", background, "Knowledge background text file");
    runc->add_option("--background-endpoint", ra.background_endpoint, "Model that writes the knowledge background");
    runc->add_option("--max-turns", ra.game.max_turns, "Turn budget per round (0 = deck size)")->capture_default_str();
    runc->add_option("--judge-retries", ra.game.judge_retries, "Re-asks after an unparsable judge reply")
        ->capture_default_str();
    runc->add_option("--player-reprompts", ra.game.player_reprompts, "Re-asks after an empty player reply")
        ->capture_default_str();
    runc->add_option("--sentinel", ra.game.final_guess_sentinel, "Final guess marker")->capture_default_str();
    runc->add_flag("--repeated-guess", ra.game.repeated_guess_mode, "Wrong final guesses do not end the round");
    runc->add_option("--parallelism", ra.parallelism, "Rounds played concurrently")->capture_default_str();
    runc->add_option("--output-dir", ra.output_dir, "Output directory")->capture_default_str();
    runc->add_option("--clock", ra.clock, "auto, logical or system timestamps")->capture_default_str();
    add_score_flags(runc, ra.scoring);

    ScoreArgs sa;
    auto* score = app.add_subcommand("score", "Recompute a report from transcripts");
    score->add_option("--transcripts", sa.transcripts, "transcripts.jsonl")->required();
    score->add_option("--output-dir", sa.output_dir, "Write report.json and report.md here");
    add_score_flags(score, sa.scoring);

    AgreementArgs aa;
    auto* agree = app.add_subcommand("agreement", "Judge agreement with gold labels");
    agree->add_option("--judgments", aa.judgments, "CSV instance_id,judge_id,token")->required();
    agree->add_option("--gold", aa.gold, "CSV instance_id,token")->required();
    agree->add_option("--reference", aa.reference_judge, "Reference judge id for pairwise agreement")->required();
    agree->add_option("--output-dir", aa.output_dir, "Write agreement.json here");

    MergeArgs ma;
    auto* merge = app.add_subcommand("report-merge", "Model x domain table from several reports");
    merge->add_option("reports", ma.reports, "report.json files or run directories")->required();
    merge->add_option("--output-dir", ma.output_dir, "Write report.md here");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        nlohmann::ordered_json j;
        j["error"] = {{"code", "UsageError"}, {"message", e.what()}};
        err << j.dump() << '\n';
        return 1;
    }

    if (!background.empty()) ra.background = background;
    if (!seed_terms.empty()) bd.seed_terms = seed_terms;

    if (build->parsed()) return cmd_build_deck(bd, g, out, err);
    if (runc->parsed()) return cmd_run(ra, g, out, err);
    if (score->parsed()) return cmd_score(sa, g, out, err);
    if (agree->parsed()) return cmd_agreement(aa, g, out, err);
    return cmd_report_merge(ma, g, out, err);
}

}  // namespace guessarena::cli
