#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <Eigen/Dense>

#include "guessarena/deckgen.hpp"
#include "guessarena/random.hpp"

namespace guessarena::deckgen {

EmbeddingMatrix embed(std::span<const std::string> texts, agents::Embedder& embedder) {
    if (texts.empty()) throw Error(ErrorCode::InvalidArgument, "embed needs at least one text");
    EmbeddingMatrix m;
    m.keywords.assign(texts.begin(), texts.end());
    m.encoder_id = embedder.id();
    m.vectors = embedder.embed_batch(texts);
    if (m.vectors.size() != texts.size())
        throw Error(ErrorCode::DimensionMismatch, "encoder returned " + std::to_string(m.vectors.size()) +
                                                      " vectors for " + std::to_string(texts.size()) + " texts");
    const std::size_t dim = m.vectors.front().size();
    if (dim < 2) throw Error(ErrorCode::DimensionMismatch, "embedding dimension must be at least 2");
    for (std::size_t i = 0; i < m.vectors.size(); ++i) {
        const auto& v = m.vectors[i];
        if (v.size() != dim)
            throw Error(ErrorCode::DimensionMismatch, "ragged embedding for '" + m.keywords[i] + "'");
        bool nonzero = false;
        for (double x : v) {
            if (!std::isfinite(x)) throw Error(ErrorCode::DimensionMismatch, "non-finite embedding for '" + m.keywords[i] + "'");
            nonzero = nonzero || x != 0.0;
        }
        if (!nonzero) throw Error(ErrorCode::ZeroVector, "zero embedding for '" + m.keywords[i] + "'");
    }
    return m;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with different lengths");
    double dot = 0, uu = 0, vv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0 || vv == 0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
    return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

void FilterParams::validate() const {
    if (!(0.0 <= tau_lower && tau_lower < tau_upper && tau_upper <= 1.0))
        throw Error(ErrorCode::InvalidParams, "filter thresholds must satisfy 0 <= tau_lower < tau_upper <= 1");
}

bool within_band(double similarity, const FilterParams& params) noexcept {
    return params.tau_lower < similarity && similarity < params.tau_upper;
}

std::string topic_text(const DomainSpec& domain) { return domain.name + ": " + domain.description; }

namespace {

struct Filtered {
    KeywordSet kept;
    EmbeddingMatrix embeddings;  // rows for the kept keywords only
};

Filtered filter_with_embeddings(const KeywordSet& kws, const std::string& topic, const FilterParams& params,
                                agents::Embedder& embedder) {
    params.validate();
    Filtered out;
    out.embeddings.encoder_id = embedder.id();
    if (kws.size() == 0) return out;
    std::vector<std::string> texts;
    texts.reserve(kws.size() + 1);
    texts.push_back(topic);
    texts.insert(texts.end(), kws.keywords.begin(), kws.keywords.end());
    auto m = embed(texts, embedder);
    const auto& topic_vec = m.vectors.front();
    for (std::size_t i = 0; i < kws.keywords.size(); ++i) {
        const auto& k = kws.keywords[i];
        if (!within_band(cosine(m.vectors[i + 1], topic_vec), params)) continue;
        out.kept.keywords.push_back(k);
        if (auto it = kws.provenance.find(k); it != kws.provenance.end()) out.kept.provenance[k] = it->second;
        else out.kept.provenance[k] = {};
        out.embeddings.keywords.push_back(k);
        out.embeddings.vectors.push_back(m.vectors[i + 1]);
    }
    return out;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

}  // namespace

KeywordSet filter_keywords(const KeywordSet& kws, const std::string& topic, const FilterParams& params,
                           agents::Embedder& embedder) {
    return filter_with_embeddings(kws, topic, params, embedder).kept;
}

std::vector<std::vector<double>> affinity_matrix(const EmbeddingMatrix& emb) {
    const std::size_t n = emb.vectors.size();
    std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        s[i][i] = std::max(0.0, cosine(emb.vectors[i], emb.vectors[i]));
        for (std::size_t j = i + 1; j < n; ++j) s[i][j] = s[j][i] = std::max(0.0, cosine(emb.vectors[i], emb.vectors[j]));
    }
    return s;
}

std::vector<std::vector<double>> spectral_embedding(const std::vector<std::vector<double>>& affinity, int k) {
    const auto n = static_cast<Eigen::Index>(affinity.size());
    if (k < 1 || k > n) throw Error(ErrorCode::TooFewKeywords, "spectral embedding needs 1 <= k <= n");
    Eigen::MatrixXd s(n, n);
    Eigen::VectorXd inv_sqrt_degree(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double row = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            s(i, j) = affinity[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            row += s(i, j);
        }
        if (!(row > 0) || !std::isfinite(row))
            throw Error(ErrorCode::DegenerateSimilarity, "keyword " + std::to_string(i) + " has zero total similarity");
        inv_sqrt_degree(i) = 1.0 / std::sqrt(row);
    }
    Eigen::MatrixXd lap = inv_sqrt_degree.asDiagonal() * s * inv_sqrt_degree.asDiagonal();
    lap = 0.5 * (lap + lap.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::DegenerateSimilarity, "eigendecomposition failed");
    // Eigenvalues ascend; the last k columns hold the largest ones.
    Eigen::MatrixXd top(n, k);
    // Directions with a null eigenvalue carry no affinity structure and are
    // an arbitrary basis of a degenerate eigenspace, so they are zeroed.
    const double largest = std::abs(solver.eigenvalues()(n - 1));
    for (int c = 0; c < k; ++c) {
        if (std::abs(solver.eigenvalues()(n - 1 - c)) <= 1e-9 * largest) top.col(c).setZero();
        else top.col(c) = solver.eigenvectors().col(n - 1 - c);
    }

    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(k)));
    for (Eigen::Index i = 0; i < n; ++i) {
        double len = top.row(i).norm();
        for (int c = 0; c < k; ++c) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = len > 0 ? top(i, c) / len : 0.0;
    }
    return rows;
}

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed, int max_iterations,
                    double relative_tolerance) {
    const std::size_t n = points.size();
    if (k < 1 || static_cast<std::size_t>(k) > n) throw Error(ErrorCode::TooFewKeywords, "k-means needs 1 <= k <= n");
    Rng rng(seed);
    KMeansResult r;

    // k-means++ seeding.
    r.centroids.push_back(points[rng.below(n)]);
    std::vector<double> d2(n);
    while (r.centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : r.centroids) best = std::min(best, squared_distance(points[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0) {
            double target = rng.uniform01() * total;
            double acc = 0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.below(n);
        }
        r.centroids.push_back(points[pick]);
    }

    const std::size_t dim = points.front().size();
    r.assignments.assign(n, 0);
    double prev_inertia = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= max_iterations; ++iter) {
        r.iterations = iter;
        double inertia = 0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(points[i], r.centroids[0]);
            for (int c = 1; c < k; ++c) {
                double d = squared_distance(points[i], r.centroids[static_cast<std::size_t>(c)]);
                if (d < best_d) {  // strict: equidistant keeps the lower index
                    best_d = d;
                    best = c;
                }
            }
            r.assignments[i] = best;
            inertia += best_d;
        }
        r.inertia = inertia;

        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = static_cast<std::size_t>(r.assignments[i]);
            ++counts[c];
            for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
        }
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (counts[c] == 0) continue;  // empty clusters keep their centroid
            for (std::size_t d = 0; d < dim; ++d) r.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }

        if (inertia == 0.0) break;
        if (std::isfinite(prev_inertia) && prev_inertia - inertia <= relative_tolerance * prev_inertia) break;
        prev_inertia = inertia;
    }
    return r;
}

int ClusterModel::non_empty_clusters() const {
    std::vector<bool> seen(static_cast<std::size_t>(std::max(k, 0)), false);
    for (int a : assignments)
        if (a >= 0 && a < k) seen[static_cast<std::size_t>(a)] = true;
    return static_cast<int>(std::count(seen.begin(), seen.end(), true));
}

ClusterModel cluster_keywords(const EmbeddingMatrix& emb, int k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::InvalidArgument, "cluster count must be at least 2");
    if (emb.vectors.size() < static_cast<std::size_t>(k))
        throw Error(ErrorCode::TooFewKeywords, std::to_string(emb.vectors.size()) + " keywords cannot form " +
                                                   std::to_string(k) + " clusters");
    auto affinity = affinity_matrix(emb);
    std::string bytes;
    bytes.reserve(affinity.size() * affinity.size() * sizeof(double));
    for (const auto& row : affinity) {
        for (double x : row) {
            char buf[sizeof(double)];
            std::memcpy(buf, &x, sizeof(double));
            bytes.append(buf, sizeof(double));
        }
    }
    auto rows = spectral_embedding(affinity, k);
    auto km = kmeans(rows, k, seed);
    ClusterModel model;
    model.k = k;
    model.assignments = std::move(km.assignments);
    model.similarity_matrix_digest = fnv1a_hex(bytes);
    model.seed = seed;
    model.iterations = km.iterations;
    model.inertia = km.inertia;
    return model;
}

Deck sample_deck(const ClusterModel& model, const KeywordSet& kws, int deck_size, std::uint64_t seed,
                 const DeckMeta& meta) {
    if (model.assignments.size() != kws.size())
        throw Error(ErrorCode::InvalidArgument, "cluster assignments do not match the keyword set");
    if (deck_size < 2) throw Error(ErrorCode::InvalidArgument, "deck_size must be at least 2");
    if (kws.size() < static_cast<std::size_t>(deck_size))
        throw Error(ErrorCode::TooFewKeywords, std::to_string(kws.size()) + " keywords cannot fill a deck of " +
                                                   std::to_string(deck_size));
    std::vector<KeywordCluster> clusters(static_cast<std::size_t>(model.k));
    for (int c = 0; c < model.k; ++c) clusters[static_cast<std::size_t>(c)].id = c;
    for (std::size_t i = 0; i < kws.size(); ++i) {
        int c = model.assignments[i];
        if (c < 0 || c >= model.k) throw Error(ErrorCode::InvalidArgument, "cluster id out of range");
        clusters[static_cast<std::size_t>(c)].keywords.push_back(kws.keywords[i]);
    }

    Rng rng(seed);
    std::vector<std::vector<std::string>> pools;
    std::vector<int> pool_ids;
    for (const auto& cl : clusters) {
        if (cl.keywords.empty()) continue;
        auto pool = cl.keywords;
        rng.shuffle(pool);
        pools.push_back(std::move(pool));
        pool_ids.push_back(cl.id);
    }
    std::vector<Card> cards;
    std::vector<std::size_t> taken(pools.size(), 0);
    while (cards.size() < static_cast<std::size_t>(deck_size)) {
        for (std::size_t p = 0; p < pools.size() && cards.size() < static_cast<std::size_t>(deck_size); ++p) {
            if (taken[p] >= pools[p].size()) continue;
            cards.emplace_back(pools[p][taken[p]++], pool_ids[p]);
        }
    }
    return Deck(meta.domain, std::move(cards), std::move(clusters), meta.encoder_id,
                {meta.thresholds.tau_lower, meta.thresholds.tau_upper}, meta.created_at);
}

Deck build_deck(const DomainSpec& domain, std::span<const ingest::SourceDocument> docs, agents::ChatClient& chat,
                agents::Embedder& embedder, const BuildOptions& opts, BuildSummary* summary) {
    domain.validate();
    opts.filter.validate();
    if (docs.empty()) throw Error(ErrorCode::InvalidArgument, "no documents");
    auto extracted = extract_corpus(domain, docs, chat, opts.max_keywords, opts.workers, opts.extract);
    auto filtered = filter_with_embeddings(extracted, topic_text(domain), opts.filter, embedder);
    auto model = cluster_keywords(filtered.embeddings, opts.clusters, opts.seed);
    auto deck = sample_deck(model, filtered.kept, opts.deck_size, opts.seed,
                            {domain, embedder.id(), opts.filter, opts.created_at});
    if (summary) {
        summary->documents = docs.size();
        summary->extracted = extracted.size();
        summary->kept = filtered.kept.size();
        summary->non_empty_clusters = model.non_empty_clusters();
        summary->model = model;
    }
    return deck;
}

}  // namespace guessarena::deckgen
