#pragma once

// Command-line front end. Commands are plain functions so tests can drive
// them in-process.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "guessarena/agents.hpp"
#include "guessarena/engine.hpp"
#include "guessarena/metrics.hpp"

namespace guessarena::cli {

std::string code_version();

struct Globals {
    std::uint64_t seed = 42;
    bool verbose = false;
};

struct BuildDeckArgs {
    std::filesystem::path docs;
    std::string domain_name;
    std::string domain_desc;
    std::optional<std::filesystem::path> seed_terms;
    int max_keywords = 100;
    double tau_lower = 0.35;
    double tau_upper = 0.9;
    int clusters = 10;
    int deck_size = 30;
    std::filesystem::path out;  // empty: <output_dir>/deck.json
    std::filesystem::path output_dir = ".";
    std::string chat_endpoint;
    std::string embed_endpoint;
    std::string created_at;  // empty: current time
    int workers = 4;
};

/// Scoring flags shared by `run` and `score`.
struct ScoreFlags {
    double w1 = 1.0 / 3.0;
    double w2 = 1.0 / 3.0;
    double w3 = 1.0 / 3.0;
    double alpha = 4.0;
    std::string t_rand_mode = "analytic";
    int t_rand_trials = 10000;
    std::string aggregation = "per_round";
};

struct RunArgs {
    std::filesystem::path deck;
    std::string player;
    std::string judge;
    std::string player_label;  // defaults to the player spec
    std::string regime = "basic";
    std::optional<std::filesystem::path> background;
    std::string background_endpoint;
    engine::GameConfig game;
    ScoreFlags scoring;
    int parallelism = 1;
    std::filesystem::path output_dir = "out";
    std::string clock = "auto";  // auto, logical, system
};

struct ScoreArgs {
    std::filesystem::path transcripts;
    std::filesystem::path output_dir;  // empty: print only
    ScoreFlags scoring;
};

struct AgreementArgs {
    std::filesystem::path judgments;
    std::filesystem::path gold;
    std::string reference_judge;
    std::filesystem::path output_dir;
};

struct MergeArgs {
    std::vector<std::filesystem::path> reports;
    std::filesystem::path output_dir;
};

int cmd_build_deck(const BuildDeckArgs& args, const Globals& g, std::ostream& out, std::ostream& err);
int cmd_run(const RunArgs& args, const Globals& g, std::ostream& out, std::ostream& err);
int cmd_score(const ScoreArgs& args, const Globals& g, std::ostream& out, std::ostream& err);
int cmd_agreement(const AgreementArgs& args, const Globals& g, std::ostream& out, std::ostream& err);
int cmd_report_merge(const MergeArgs& args, const Globals& g, std::ostream& out, std::ostream& err);

/// Parses `args` (without the program name) and dispatches.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Endpoint specs: "sim:..." for the built-in simulated agents and encoder,
// "replay:<rules.json>" for canned chat replies, otherwise an endpoint JSON
// file or an inline JSON object.
std::shared_ptr<agents::ChatClient> make_chat_client(const std::string& spec);
std::shared_ptr<agents::Embedder> make_embedder(const std::string& spec);

metrics::MetricParams make_params(const ScoreFlags& flags, int deck_size, std::uint64_t seed);

}  // namespace guessarena::cli
