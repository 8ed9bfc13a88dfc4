#pragma once

// Judge reliability: agreement with gold labels and majority voting.

#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guessarena/core.hpp"

namespace guessarena::analysis {

struct JudgmentRecord {
    std::string instance_id;
    std::string judge_id;
    JudgeToken token;
};

struct GoldLabel {
    std::string instance_id;
    JudgeToken token;
};

/// A majority vote result; nullopt means the vote tied and abstained.
struct Verdict {
    std::string instance_id;
    std::optional<JudgeToken> token;
};

/// Percentage in [0, 100] of a single judge's records matching gold.
double agreement_rate(std::span<const JudgmentRecord> judgments, std::span<const GoldLabel> gold);

/// Abstentions count as mismatches.
double agreement_rate(std::span<const Verdict> verdicts, std::span<const GoldLabel> gold);

/// Per instance, the strictly most frequent token wins; ties abstain.
/// Output is ordered by instance id.
std::vector<Verdict> majority_vote(std::span<const JudgmentRecord> judgments);

struct AgreementReport {
    std::map<std::string, double> per_judge;
    double majority = 0.0;
    std::map<std::string, double> pairwise;  // vs the reference judge on shared instances
    std::string reference_judge;
    std::size_t instances = 0;
};

AgreementReport analyze(std::span<const JudgmentRecord> judgments, std::span<const GoldLabel> gold,
                        const std::string& reference_judge);

/// CSV with header instance_id,judge_id,token.
std::vector<JudgmentRecord> read_judgments_csv(std::istream& in);
/// CSV with header instance_id,token.
std::vector<GoldLabel> read_gold_csv(std::istream& in);

/// Minimal RFC 4180 row splitter (quoted fields, doubled quotes).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace guessarena::analysis
