#include "guessarena/transcript.hpp"

#include "guessarena/deck_io.hpp"

namespace guessarena::engine {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const TranscriptRecord& rec) {
    const auto& r = rec.round;
    ordered_json j;
    j["round_id"] = r.round_id;
    j["target_card"] = r.target_card.text();
    j["deck_digest"] = rec.deck_digest;
    j["regime"] = rec.regime;
    j["turns"] = ordered_json::array();
    for (const auto& t : r.transcript) {
        ordered_json tj{{"index", t.index},
                        {"player_text", t.player_text},
                        {"judge_token", to_string(t.judge_token)},
                        {"is_final_guess", t.is_final_guess},
                        {"wall_time_ms", t.wall_time_ms}};
        if (t.player_raw) tj["player_raw"] = *t.player_raw;
        j["turns"].push_back(std::move(tj));
    }
    j["final_guess"] = r.final_guess ? ordered_json(*r.final_guess) : ordered_json(nullptr);
    j["correct"] = r.correct;
    j["t_model"] = r.t_model;
    j["terminated_by"] = to_string(r.terminated_by);
    j["error_detail"] = r.error_detail ? ordered_json(*r.error_detail) : ordered_json(nullptr);
    j["timing"] = {{"started_at", r.started_at}, {"ended_at", r.ended_at}};
    j["max_turns"] = rec.max_turns;
    j["deck_size"] = rec.deck_size;
    j["player"] = rec.player;
    j["domain"] = rec.domain;
    j["provenance"] = {{"seed", rec.provenance.seed}, {"code_version", rec.provenance.code_version}};
    return j;
}

TranscriptRecord transcript_from_json(const json& j) {
    try {
        TranscriptRecord rec;
        auto& r = rec.round;
        r.round_id = j.at("round_id").get<std::string>();
        r.target_card = Card(j.at("target_card").get<std::string>());
        for (const auto& tj : j.at("turns")) {
            Turn t;
            t.index = tj.at("index").get<int>();
            t.player_text = tj.at("player_text").get<std::string>();
            t.judge_token = judge_token_from_string(tj.at("judge_token").get<std::string>());
            t.is_final_guess = tj.at("is_final_guess").get<bool>();
            t.wall_time_ms = tj.value("wall_time_ms", std::int64_t{0});
            if (tj.contains("player_raw")) t.player_raw = tj.at("player_raw").get<std::string>();
            r.transcript.push_back(std::move(t));
        }
        if (!j.at("final_guess").is_null()) r.final_guess = j.at("final_guess").get<std::string>();
        r.correct = j.at("correct").get<bool>();
        r.t_model = j.at("t_model").get<int>();
        r.terminated_by = termination_from_string(j.at("terminated_by").get<std::string>());
        if (j.contains("error_detail") && !j.at("error_detail").is_null())
            r.error_detail = j.at("error_detail").get<std::string>();
        if (j.contains("timing")) {
            r.started_at = j.at("timing").value("started_at", std::string{});
            r.ended_at = j.at("timing").value("ended_at", std::string{});
        }
        rec.deck_digest = j.at("deck_digest").get<std::string>();
        rec.regime = j.value("regime", std::string{});
        rec.max_turns = j.value("max_turns", 0);
        rec.deck_size = j.value("deck_size", 0);
        rec.player = j.value("player", std::string{});
        rec.domain = j.value("domain", std::string{});
        if (j.contains("provenance")) {
            rec.provenance.seed = j.at("provenance").value("seed", std::uint64_t{0});
            rec.provenance.code_version = j.at("provenance").value("code_version", std::string{});
        }
        if (r.t_model < 1) throw Error(ErrorCode::MalformedInput, "t_model must be >= 1");
        return rec;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedInput, std::string("transcript record: ") + e.what());
    }
}

std::string to_jsonl(const std::vector<TranscriptRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<TranscriptRecord> parse_transcripts(std::string_view jsonl) {
    std::vector<TranscriptRecord> out;
    std::size_t start = 0, lineno = 0;
    while (start < jsonl.size()) {
        auto nl = jsonl.find('\n', start);
        auto line = jsonl.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        ++lineno;
        start = nl == std::string_view::npos ? jsonl.size() : nl + 1;
        if (trim(line).empty()) continue;
        try {
            out.push_back(transcript_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::MalformedInput, "transcript line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<TranscriptRecord> read_transcripts(const std::filesystem::path& path) {
    return parse_transcripts(read_text_file(path));
}

}  // namespace guessarena::engine
