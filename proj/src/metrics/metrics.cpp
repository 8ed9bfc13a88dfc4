#include "guessarena/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace guessarena::metrics {

std::string_view to_string(Aggregation a) noexcept { return a == Aggregation::PerRound ? "per_round" : "mean_t_model"; }

Aggregation aggregation_from_string(std::string_view s) {
    if (s == "per_round") return Aggregation::PerRound;
    if (s == "mean_t_model") return Aggregation::MeanTModel;
    throw Error(ErrorCode::InvalidParams, "unknown aggregation: " + std::string(s));
}

void MetricParams::validate() const {
    if (w1 < 0 || w2 < 0 || w3 < 0) throw Error(ErrorCode::InvalidParams, "weights must be non-negative");
    if (std::abs(w1 + w2 + w3 - 1.0) > 1e-9) throw Error(ErrorCode::InvalidParams, "weights must sum to 1");
    if (!(alpha > 0)) throw Error(ErrorCode::InvalidParams, "alpha must be positive");
    if (!(t_rand_value > 0)) throw Error(ErrorCode::InvalidParams, "t_rand must be positive");
}

double reasoning_accuracy(std::span<const RoundResult> results) {
    if (results.empty()) throw Error(ErrorCode::EmptyResults, "no rounds to score");
    auto correct = std::count_if(results.begin(), results.end(), [](const RoundResult& r) { return r.correct; });
    return static_cast<double>(correct) / static_cast<double>(results.size());
}

double reasoning_efficiency(double t_model, double t_rand, double alpha) {
    if (!(t_rand > 0) || !(t_model >= 1) || !(alpha > 0))
        throw Error(ErrorCode::InvalidParams, "reasoning_efficiency needs t_rand > 0, t_model >= 1, alpha > 0");
    return 1.0 / (1.0 + std::exp(alpha * (t_model - t_rand) / t_rand));
}

double knowledge_applicability(double t_model, double t_rand) {
    if (!(t_rand > 0) || !(t_model >= 1))
        throw Error(ErrorCode::InvalidParams, "knowledge_applicability needs t_rand > 0, t_model >= 1");
    return std::exp(-std::max(0.0, (t_model - t_rand) / t_rand));
}

double composite_score(double E, double F, double K, const MetricParams& params) {
    params.validate();
    for (double c : {E, F, K})
        if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::InvalidParams, "score components must lie in [0, 1]");
    return params.w1 * E + params.w2 * F + params.w3 * K;
}

MetricReport score_deck(std::span<const RoundResult> results, const MetricParams& params, int max_turns,
                        std::string deck_digest) {
    params.validate();
    if (results.empty()) throw Error(ErrorCode::EmptyResults, "no rounds to score");
    if (max_turns < 1) throw Error(ErrorCode::InvalidParams, "max_turns must be >= 1");

    MetricReport rep;
    rep.deck_digest = std::move(deck_digest);
    rep.N = static_cast<int>(results.size());
    rep.max_turns = max_turns;
    rep.params = params;
    rep.E = reasoning_accuracy(results);

    std::vector<double> fs, ks, ts;
    for (const auto& r : results) {
        const double t_eff = r.correct ? r.t_model : max_turns;
        RoundMetrics m{r.round_id, r.correct, r.t_model, reasoning_efficiency(t_eff, params.t_rand_value, params.alpha),
                       knowledge_applicability(t_eff, params.t_rand_value)};
        fs.push_back(m.F);
        ks.push_back(m.K);
        ts.push_back(t_eff);
        rep.per_round.push_back(std::move(m));
    }
    // Sorted summation keeps the aggregate independent of round order.
    auto sorted_sum = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        double s = 0;
        for (double x : v) s += x;
        return s;
    };
    const double f_sum = sorted_sum(fs), k_sum = sorted_sum(ks), t_sum = sorted_sum(ts);
    const double n = static_cast<double>(results.size());
    if (params.aggregation == Aggregation::PerRound) {
        rep.F_mean = f_sum / n;
        rep.K_mean = k_sum / n;
    } else {
        rep.F_mean = reasoning_efficiency(t_sum / n, params.t_rand_value, params.alpha);
        rep.K_mean = knowledge_applicability(t_sum / n, params.t_rand_value);
    }
    rep.score = composite_score(rep.E, rep.F_mean, rep.K_mean, params);
    return rep;
}

}  // namespace guessarena::metrics
