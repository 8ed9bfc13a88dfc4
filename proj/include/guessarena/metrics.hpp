#pragma once

// Composite scoring: accuracy E, efficiency F, knowledge applicability K.

#include <span>
#include <string>
#include <vector>

#include "guessarena/core.hpp"
#include "guessarena/engine.hpp"

namespace guessarena::metrics {

enum class Aggregation {
    PerRound,     // F and K per round, then averaged
    MeanTModel,   // F and K evaluated once at the mean effective t_model
};

std::string_view to_string(Aggregation a) noexcept;
Aggregation aggregation_from_string(std::string_view s);

struct MetricParams {
    double w1 = 1.0 / 3.0;
    double w2 = 1.0 / 3.0;
    double w3 = 1.0 / 3.0;
    double alpha = 4.0;
    engine::TRandMode t_rand_mode = engine::TRandMode::Analytic;
    double t_rand_value = 15.5;
    Aggregation aggregation = Aggregation::PerRound;

    void validate() const;
};

struct RoundMetrics {
    std::string round_id;
    bool correct = false;
    int t_model = 1;
    double F = 0.0;
    double K = 0.0;
};

struct MetricReport {
    std::string deck_digest;
    int N = 0;
    int max_turns = 0;
    MetricParams params;
    std::vector<RoundMetrics> per_round;
    double E = 0.0;
    double F_mean = 0.0;
    double K_mean = 0.0;
    double score = 0.0;
};

double reasoning_accuracy(std::span<const RoundResult> results);
double reasoning_efficiency(double t_model, double t_rand, double alpha = 4.0);
double knowledge_applicability(double t_model, double t_rand);
double composite_score(double E, double F, double K, const MetricParams& params);

/// Incorrect rounds are charged `max_turns` steps for F and K.
MetricReport score_deck(std::span<const RoundResult> results, const MetricParams& params, int max_turns,
                        std::string deck_digest);

}  // namespace guessarena::metrics
