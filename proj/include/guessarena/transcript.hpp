#pragma once

// JSONL transcript records: one round per line.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "guessarena/core.hpp"

namespace guessarena::engine {

struct Provenance {
    std::uint64_t seed = 0;
    std::string code_version;
};

struct TranscriptRecord {
    RoundResult round;
    std::string deck_digest;
    std::string regime;
    int max_turns = 0;
    int deck_size = 0;
    std::string player;  // model label used in merged reports
    std::string domain;
    Provenance provenance;
};

nlohmann::ordered_json to_json(const TranscriptRecord& rec);
TranscriptRecord transcript_from_json(const nlohmann::json& j);

std::string to_jsonl(const std::vector<TranscriptRecord>& records);
std::vector<TranscriptRecord> read_transcripts(const std::filesystem::path& path);
std::vector<TranscriptRecord> parse_transcripts(std::string_view jsonl);

}  // namespace guessarena::engine
