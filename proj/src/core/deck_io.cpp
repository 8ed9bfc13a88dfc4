#include "guessarena/deck_io.hpp"

#include <fstream>
#include <sstream>

namespace guessarena {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json deck_to_json(const Deck& deck) {
    ordered_json j;
    j["domain"] = {{"name", deck.domain().name},
                   {"description", deck.domain().description},
                   {"seed_terms", deck.domain().seed_terms}};
    j["encoder_id"] = deck.encoder_id();
    j["thresholds"] = {{"lower", deck.thresholds().lower}, {"upper", deck.thresholds().upper}};
    j["clusters"] = ordered_json::array();
    for (const auto& c : deck.clusters()) j["clusters"].push_back({{"id", c.id}, {"keywords", c.keywords}});
    j["cards"] = ordered_json::array();
    for (const auto& card : deck.cards()) {
        if (card.cluster_id()) j["cards"].push_back({{"text", card.text()}, {"cluster_id", *card.cluster_id()}});
        else j["cards"].push_back(card.text());
    }
    j["created_at"] = deck.created_at();
    return j;
}

Deck deck_from_json(const json& j) {
    try {
        const auto& d = j.at("domain");
        DomainSpec domain{d.at("name").get<std::string>(), d.value("description", std::string{}),
                          d.value("seed_terms", std::vector<std::string>{})};
        std::vector<KeywordCluster> clusters;
        if (j.contains("clusters"))
            for (const auto& c : j.at("clusters"))
                clusters.push_back({c.at("id").get<int>(), c.at("keywords").get<std::vector<std::string>>()});
        std::vector<Card> cards;
        for (const auto& c : j.at("cards")) {
            // Cards are plain strings or {text, cluster_id} objects.
            if (c.is_string()) {
                cards.emplace_back(c.get<std::string>());
            } else {
                std::optional<int> cluster;
                if (c.contains("cluster_id") && !c.at("cluster_id").is_null()) cluster = c.at("cluster_id").get<int>();
                cards.emplace_back(c.at("text").get<std::string>(), cluster);
            }
        }
        Thresholds th;
        if (j.contains("thresholds")) {
            th.lower = j.at("thresholds").at("lower").get<double>();
            th.upper = j.at("thresholds").at("upper").get<double>();
        }
        return Deck(std::move(domain), std::move(cards), std::move(clusters), j.value("encoder_id", std::string{}), th,
                    j.value("created_at", std::string{}));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedInput, std::string("deck JSON: ") + e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableSource, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Deck load_deck(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedInput, path.string() + ": " + e.what());
    }
    return deck_from_json(j);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::UnreadableSource, "cannot write " + tmp.string());
        out << text;
        if (!out) throw Error(ErrorCode::UnreadableSource, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace guessarena
