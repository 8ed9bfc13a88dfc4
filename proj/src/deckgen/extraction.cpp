#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>

#include "guessarena/deckgen.hpp"

namespace guessarena::deckgen {

namespace {

constexpr std::string_view kExtractionSystem =
    "You are an expert in the field of {name}, which focuses on {description}, and your task is to generate a set "
    "of domain-specific keywords based on the provided documents. This keyword set should contain {max_keywords} "
    "keywords, each being a technical term or jargon from the field, covering as many knowledge points as "
    "possible. Avoid repetition, ensuring diversity and uniqueness among the keywords.";

constexpr std::string_view kExtractionInstruction =
    "When generating the keywords, please follow these guidelines:\n"
    "1. **Domain Focus**: Prioritize professional terms, concepts, or industry jargon from the field, ensuring the "
    "keywords accurately reflect the core content of the domain.\n"
    "2. **Uniqueness**: Ensure that each keyword in the set is unique, avoiding synonyms or near-synonyms. Each "
    "keyword must be a complete term, avoiding any abbreviations or combinations with explanatory content. For "
    "example, avoid forms like \"product lifecycle management (plm)\", \"lms (learning management system)\", or "
    "similar formats. Keywords should be the full term without any parentheses, such as \"product lifecycle "
    "management\" or \"learning management system\".\n"
    "3. **Broad Coverage**: The keywords should broadly cover various knowledge aspects of the field, including "
    "common terms, basic concepts, and specialized vocabulary from subfields. If appropriate, you may also include "
    "well-known entities within the domain, such as company names, product names, and people's names, as these "
    "entities are important representatives of the field.\n"
    "4. **Contextual Relevance**: Ensure that there is an inherent connection between the keywords. For example, "
    "in the finance industry, \"capital markets\" might be related to \"stocks,\" or \"balance sheets\" might be "
    "connected to \"financial analysis.\" Make sure related keywords have sufficient contextual relevance.\n"
    "5. **Diversity and Representativeness**: Ensure that the keywords span different domains, levels, and "
    "knowledge points, covering not only basic concepts but also niche terms and specialized language unique to "
    "the industry.\n"
    "\n"
    "The final keywords should all be in English and separated by semicolons. Please do not include any "
    "additional explanations, formatting, or unnecessary text, and return only the list of keywords.\n"
    "####Example Output:\n"
    "keyword1; keyword2; keyword3; ...; keywordn";

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return s;
}

}  // namespace

void KeywordSet::add(std::string_view keyword, const std::string& doc_id) {
    std::string key = normalize_card(keyword);
    if (key.empty()) return;
    auto [it, inserted] = provenance.try_emplace(key);
    if (inserted) keywords.push_back(key);
    if (!doc_id.empty() && std::find(it->second.begin(), it->second.end(), doc_id) == it->second.end())
        it->second.push_back(doc_id);
}

void KeywordSet::merge(const KeywordSet& other) {
    for (const auto& k : other.keywords) {
        auto it = other.provenance.find(k);
        if (it == other.provenance.end() || it->second.empty()) {
            add(k, {});
            continue;
        }
        for (const auto& doc : it->second) add(k, doc);
    }
}

bool KeywordSet::contains(std::string_view keyword) const { return provenance.count(normalize_card(keyword)) != 0; }

std::string render_extraction_prompt(const ExtractionRequest& req) {
    if (trim(req.domain.name).empty()) throw Error(ErrorCode::TemplateFieldMissing, "domain name is empty");
    if (trim(req.domain.description).empty())
        throw Error(ErrorCode::TemplateFieldMissing, "domain description is empty");
    if (req.max_keywords < 1) throw Error(ErrorCode::InvalidArgument, "max_keywords must be >= 1");

    // Placeholders are filled last-to-first so a description containing "{name}" stays literal.
    std::string system(kExtractionSystem);
    system = replace_all(system, "{max_keywords}", std::to_string(req.max_keywords));
    auto desc_pos = system.find("{description}");
    system.replace(desc_pos, std::string_view("{description}").size(), req.domain.description);
    auto name_pos = system.find("{name}");
    system.replace(name_pos, std::string_view("{name}").size(), req.domain.name);

    std::string prompt = system + "\n\n" + std::string(kExtractionInstruction);
    if (!req.domain.seed_terms.empty()) {
        prompt += "\n\nKnown domain terms: ";
        for (std::size_t i = 0; i < req.domain.seed_terms.size(); ++i) {
            if (i) prompt += "; ";
            prompt += req.domain.seed_terms[i];
        }
    }
    return prompt;
}

std::vector<agents::Message> extraction_messages(const ExtractionRequest& req, std::string_view content) {
    return {{agents::Role::System, render_extraction_prompt(req)}, {agents::Role::User, std::string(content)}};
}

KeywordSet parse_keyword_reply(std::string_view reply, const std::string& doc_id) {
    KeywordSet out;
    std::size_t start = 0;
    while (start <= reply.size()) {
        auto semi = reply.find(';', start);
        std::string_view token =
            reply.substr(start, semi == std::string_view::npos ? std::string_view::npos : semi - start);
        std::string item = trim(token);
        if (!item.empty() && item.find_first_of("()") == std::string::npos) out.add(item, doc_id);
        if (semi == std::string_view::npos) break;
        start = semi + 1;
    }
    return out;
}

KeywordSet extract_keywords(const ExtractionRequest& req, agents::ChatClient& chat, const ExtractOptions& opts) {
    const std::string prompt = render_extraction_prompt(req);
    const std::string doc_id = req.doc.doc_id();
    KeywordSet result;
    if (prompt.size() + req.doc.content.size() <= opts.context_budget_chars) {
        auto messages = extraction_messages(req, req.doc.content);
        result = parse_keyword_reply(chat.chat(messages), doc_id);
    } else {
        for (const auto& unit : ingest::segment(req.doc, opts.max_unit_chars)) {
            auto messages = extraction_messages(req, unit.text);
            result.merge(parse_keyword_reply(chat.chat(messages), doc_id));
        }
    }
    if (result.size() == 0) throw Error(ErrorCode::EmptyExtraction, "no keywords survived parsing for " + doc_id);
    return result;
}

KeywordSet extract_corpus(const DomainSpec& domain, std::span<const ingest::SourceDocument> docs,
                          agents::ChatClient& chat, int max_keywords, int workers, const ExtractOptions& opts) {
    std::vector<std::optional<KeywordSet>> results(docs.size());
    std::vector<std::exception_ptr> errors(docs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < docs.size(); i = next++) {
            try {
                results[i] = extract_keywords({domain, docs[i], max_keywords}, chat, opts);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::size_t pool = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1,
                                               std::max<std::size_t>(docs.size(), 1));
    {
        std::vector<std::jthread> threads;
        for (std::size_t t = 1; t < pool; ++t) threads.emplace_back(work);
        work();
    }
    KeywordSet all;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (errors[i]) {
            // A document with nothing usable is skipped; transport failures abort.
            try {
                std::rethrow_exception(errors[i]);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptyExtraction) throw;
            }
            continue;
        }
        all.merge(*results[i]);
    }
    if (all.size() == 0) throw Error(ErrorCode::EmptyExtraction, "no keywords extracted from any document");
    return all;
}

}  // namespace guessarena::deckgen
