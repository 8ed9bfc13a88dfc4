#pragma once

#include <filesystem>

#include <json.hpp>

#include "guessarena/core.hpp"

namespace guessarena {

/// {domain:{name,description,seed_terms}, encoder_id, thresholds:{lower,upper},
///  clusters:[{id,keywords}], cards:[...], created_at}
nlohmann::ordered_json deck_to_json(const Deck& deck);
Deck deck_from_json(const nlohmann::json& j);

Deck load_deck(const std::filesystem::path& path);

/// Writes `text` to `path` atomically (temp file + rename).
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace guessarena
