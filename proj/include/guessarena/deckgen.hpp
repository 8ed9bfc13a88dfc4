#pragma once

// Deck construction: keyword extraction, topic-similarity filtering,
// spectral clustering and stratified sampling.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guessarena/agents.hpp"
#include "guessarena/core.hpp"
#include "guessarena/ingest.hpp"

namespace guessarena::deckgen {

struct ExtractionRequest {
    DomainSpec domain;
    ingest::SourceDocument doc;
    int max_keywords = 100;
};

struct KeywordSet {
    std::vector<std::string> keywords;  // normalized, first-seen order
    std::map<std::string, std::vector<std::string>> provenance;

    /// Adds a keyword (normalizing it) and records its source; duplicates only extend provenance.
    void add(std::string_view keyword, const std::string& doc_id);
    void merge(const KeywordSet& other);
    bool contains(std::string_view keyword) const;
    std::size_t size() const noexcept { return keywords.size(); }
};

struct EmbeddingMatrix {
    std::vector<std::string> keywords;
    std::vector<std::vector<double>> vectors;
    std::string encoder_id;

    std::size_t dimension() const { return vectors.empty() ? 0 : vectors.front().size(); }
};

struct FilterParams {
    double tau_lower = 0.35;
    double tau_upper = 0.9;

    void validate() const;
};

struct ClusterModel {
    int k = 10;
    std::vector<int> assignments;  // aligned with the embedded keywords
    std::string similarity_matrix_digest;
    std::uint64_t seed = 0;
    int iterations = 0;
    double inertia = 0.0;

    int non_empty_clusters() const;
};

std::string render_extraction_prompt(const ExtractionRequest& req);

/// System message is the rendered template; the user message carries `content`.
std::vector<agents::Message> extraction_messages(const ExtractionRequest& req, std::string_view content);

/// Splits on ';', trims, drops empties and parenthesized entries, normalizes, deduplicates.
KeywordSet parse_keyword_reply(std::string_view reply, const std::string& doc_id);

struct ExtractOptions {
    std::size_t context_budget_chars = 32000;  // rendered prompt + document
    std::size_t max_unit_chars = ingest::kDefaultMaxUnitChars;
};

KeywordSet extract_keywords(const ExtractionRequest& req, agents::ChatClient& chat, const ExtractOptions& opts = {});

/// Extracts from every document with a bounded worker pool and unions the
/// results in document order.
KeywordSet extract_corpus(const DomainSpec& domain, std::span<const ingest::SourceDocument> docs,
                          agents::ChatClient& chat, int max_keywords, int workers = 4,
                          const ExtractOptions& opts = {});

EmbeddingMatrix embed(std::span<const std::string> texts, agents::Embedder& embedder);

double cosine(std::span<const double> u, std::span<const double> v);

/// Open-interval membership tau_lower < similarity < tau_upper.
bool within_band(double similarity, const FilterParams& params) noexcept;

/// Text embedded as the filtering topic: "name: description".
std::string topic_text(const DomainSpec& domain);

KeywordSet filter_keywords(const KeywordSet& kws, const std::string& topic, const FilterParams& params,
                           agents::Embedder& embedder);

/// Cosine similarity matrix with negative entries clamped to zero.
std::vector<std::vector<double>> affinity_matrix(const EmbeddingMatrix& emb);

struct KMeansResult {
    std::vector<int> assignments;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding; ties go to the lowest centroid index.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                    int max_iterations = 300, double relative_tolerance = 1e-6);

/// Rows of the top-k eigenvectors of D^-1/2 S D^-1/2, each scaled to unit length.
std::vector<std::vector<double>> spectral_embedding(const std::vector<std::vector<double>>& affinity, int k);

ClusterModel cluster_keywords(const EmbeddingMatrix& emb, int k, std::uint64_t seed);

struct DeckMeta {
    DomainSpec domain;
    std::string encoder_id;
    FilterParams thresholds;
    std::string created_at;
};

/// Round-robin over non-empty clusters in ascending id, drawing without
/// replacement from a seeded shuffle of each cluster.
/// `kws` must list keywords in the order the model's assignments refer to.
Deck sample_deck(const ClusterModel& model, const KeywordSet& kws, int deck_size, std::uint64_t seed,
                 const DeckMeta& meta);

struct BuildOptions {
    int max_keywords = 100;
    FilterParams filter;
    int clusters = 10;
    int deck_size = 30;
    std::uint64_t seed = 42;
    int workers = 4;
    std::string created_at;
    ExtractOptions extract;
};

struct BuildSummary {
    std::size_t documents = 0;
    std::size_t extracted = 0;
    std::size_t kept = 0;
    int non_empty_clusters = 0;
    ClusterModel model;
};

Deck build_deck(const DomainSpec& domain, std::span<const ingest::SourceDocument> docs, agents::ChatClient& chat,
                agents::Embedder& embedder, const BuildOptions& opts, BuildSummary* summary = nullptr);

}  // namespace guessarena::deckgen
