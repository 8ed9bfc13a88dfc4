#include "guessarena/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>

#include "guessarena/deck_io.hpp"

namespace guessarena::metrics {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const ReportFile& rf) {
    const auto& r = rf.report;
    ordered_json j;
    j["deck_digest"] = r.deck_digest;
    j["domain"] = rf.domain;
    j["player"] = rf.player;
    j["regime"] = rf.regime;
    j["N"] = r.N;
    j["max_turns"] = r.max_turns;
    j["params"] = {{"w1", r.params.w1},
                   {"w2", r.params.w2},
                   {"w3", r.params.w3},
                   {"alpha", r.params.alpha},
                   {"t_rand_mode", engine::to_string(r.params.t_rand_mode)},
                   {"t_rand", r.params.t_rand_value},
                   {"aggregation", to_string(r.params.aggregation)}};
    j["E"] = r.E;
    j["F_mean"] = r.F_mean;
    j["K_mean"] = r.K_mean;
    j["score"] = r.score;
    j["per_round"] = ordered_json::array();
    for (const auto& m : r.per_round)
        j["per_round"].push_back(
            {{"round_id", m.round_id}, {"correct", m.correct}, {"t_model", m.t_model}, {"F", m.F}, {"K", m.K}});
    j["provenance"] = {{"seed", rf.provenance.seed}, {"code_version", rf.provenance.code_version}};
    return j;
}

ReportFile report_from_json(const json& j) {
    try {
        ReportFile rf;
        auto& r = rf.report;
        r.deck_digest = j.at("deck_digest").get<std::string>();
        rf.domain = j.value("domain", std::string{});
        rf.player = j.value("player", std::string{});
        rf.regime = j.value("regime", std::string{});
        r.N = j.at("N").get<int>();
        r.max_turns = j.value("max_turns", 0);
        const auto& p = j.at("params");
        r.params.w1 = p.at("w1").get<double>();
        r.params.w2 = p.at("w2").get<double>();
        r.params.w3 = p.at("w3").get<double>();
        r.params.alpha = p.at("alpha").get<double>();
        r.params.t_rand_mode = engine::t_rand_mode_from_string(p.value("t_rand_mode", std::string{"analytic"}));
        r.params.t_rand_value = p.at("t_rand").get<double>();
        r.params.aggregation = aggregation_from_string(p.value("aggregation", std::string{"per_round"}));
        r.E = j.at("E").get<double>();
        r.F_mean = j.at("F_mean").get<double>();
        r.K_mean = j.at("K_mean").get<double>();
        r.score = j.at("score").get<double>();
        for (const auto& m : j.value("per_round", json::array()))
            r.per_round.push_back({m.at("round_id").get<std::string>(), m.at("correct").get<bool>(),
                                   m.at("t_model").get<int>(), m.at("F").get<double>(), m.at("K").get<double>()});
        if (j.contains("provenance")) {
            rf.provenance.seed = j.at("provenance").value("seed", std::uint64_t{0});
            rf.provenance.code_version = j.at("provenance").value("code_version", std::string{});
        }
        return rf;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedInput, std::string("report JSON: ") + e.what());
    }
}

ReportFile load_report(const std::filesystem::path& path) {
    try {
        return report_from_json(json::parse(read_text_file(path)));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedInput, path.string() + ": " + e.what());
    }
}

namespace {

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string cell_label(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += "\\|";
        else out.push_back(c);
    }
    return out.empty() ? "(unnamed)" : out;
}

}  // namespace

std::string render_markdown(const ReportFile& rf) {
    const auto& r = rf.report;
    std::string md = "# GuessArena report\n\n";
    md += "| Model | Domain | Regime | N | E | F | K | Score |\n";
    md += "|---|---|---|---:|---:|---:|---:|---:|\n";
    md += "| " + cell_label(rf.player) + " | " + cell_label(rf.domain) + " | " + cell_label(rf.regime) + " | " +
          std::to_string(r.N) + " | " + fixed(r.E) + " | " + fixed(r.F_mean) + " | " + fixed(r.K_mean) + " | " +
          fixed(r.score) + " |\n\n";
    md += "Parameters: w = (" + fixed(r.params.w1) + ", " + fixed(r.params.w2) + ", " + fixed(r.params.w3) +
          "), alpha = " + fixed(r.params.alpha, 2) + ", t_rand = " + fixed(r.params.t_rand_value) + " (" +
          std::string(engine::to_string(r.params.t_rand_mode)) + "), aggregation = " +
          std::string(to_string(r.params.aggregation)) + ", max_turns = " + std::to_string(r.max_turns) + "\n\n";
    md += "Deck digest `" + r.deck_digest + "`, seed " + std::to_string(rf.provenance.seed) + ", code version `" +
          rf.provenance.code_version + "`\n\n";
    md += "## Rounds\n\n| Round | Correct | t_model | F | K |\n|---|:---:|---:|---:|---:|\n";
    for (const auto& m : r.per_round)
        md += "| " + m.round_id + " | " + (m.correct ? "yes" : "no") + " | " + std::to_string(m.t_model) + " | " +
              fixed(m.F) + " | " + fixed(m.K) + " |\n";
    return md;
}

std::string render_merged_markdown(const std::vector<ReportFile>& reports) {
    if (reports.empty()) throw Error(ErrorCode::EmptyResults, "no reports to merge");
    std::vector<std::string> models, domains;
    std::map<std::pair<std::string, std::string>, double> grid;
    for (const auto& rf : reports) {
        if (std::find(models.begin(), models.end(), rf.player) == models.end()) models.push_back(rf.player);
        if (std::find(domains.begin(), domains.end(), rf.domain) == domains.end()) domains.push_back(rf.domain);
        if (!grid.emplace(std::pair{rf.player, rf.domain}, rf.report.score).second)
            throw Error(ErrorCode::MalformedInput,
                        "two reports for model '" + rf.player + "' on domain '" + rf.domain + "'");
    }
    std::sort(domains.begin(), domains.end());

    // Rows: models in first-seen order. Columns: domains sorted, then Avg.
    const std::size_t cols = domains.size() + 1;
    std::vector<std::vector<std::optional<double>>> values(models.size(), std::vector<std::optional<double>>(cols));
    for (std::size_t m = 0; m < models.size(); ++m) {
        double sum = 0;
        std::size_t n = 0;
        for (std::size_t d = 0; d < domains.size(); ++d) {
            auto it = grid.find({models[m], domains[d]});
            if (it == grid.end()) continue;
            values[m][d] = it->second;
            sum += it->second;
            ++n;
        }
        // Avg. only when the model covers every domain.
        if (n == domains.size()) values[m][domains.size()] = sum / static_cast<double>(n);
    }

    std::string md = "| Model |";
    std::string rule = "|---|";
    for (const auto& d : domains) {
        md += " " + cell_label(d) + " |";
        rule += "---:|";
    }
    md += " Avg. |\n" + rule + "---:|\n";

    std::vector<std::string> best(cols), second(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        // Ranking uses the printed 4-decimal value so ties look like ties.
        std::set<std::string, std::greater<>> distinct;
        for (std::size_t m = 0; m < models.size(); ++m)
            if (values[m][c]) distinct.insert(fixed(*values[m][c]));
        auto it = distinct.begin();
        if (it != distinct.end()) best[c] = *it++;
        if (it != distinct.end()) second[c] = *it;
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
        md += "| " + cell_label(models[m]) + " |";
        for (std::size_t c = 0; c < cols; ++c) {
            if (!values[m][c]) {
                md += " - |";
                continue;
            }
            auto s = fixed(*values[m][c]);
            if (s == best[c]) s = "**" + s + "**";
            else if (s == second[c]) s = "<u>" + s + "</u>";
            md += " " + s + " |";
        }
        md += "\n";
    }
    return md;
}

ReportFile score_transcripts(const std::vector<engine::TranscriptRecord>& records, const MetricParams& params) {
    if (records.empty()) throw Error(ErrorCode::EmptyResults, "no transcript records");
    const auto& first = records.front();
    std::vector<RoundResult> rounds;
    rounds.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.deck_digest != first.deck_digest)
            throw Error(ErrorCode::MalformedInput, "transcripts mix decks " + first.deck_digest + " and " +
                                                       rec.deck_digest);
        if (rec.max_turns != first.max_turns)
            throw Error(ErrorCode::MalformedInput, "transcripts mix max_turns values");
        rounds.push_back(rec.round);
    }
    int max_turns = first.max_turns;
    if (max_turns < 1) {
        for (const auto& r : rounds) max_turns = std::max(max_turns, r.t_model);
    }
    ReportFile rf;
    rf.report = score_deck(rounds, params, max_turns, first.deck_digest);
    rf.domain = first.domain;
    rf.player = first.player;
    rf.regime = first.regime;
    rf.provenance = first.provenance;
    return rf;
}

}  // namespace guessarena::metrics
