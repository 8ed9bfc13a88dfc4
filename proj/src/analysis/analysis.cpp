#include "guessarena/analysis.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

namespace guessarena::analysis {

namespace {

std::unordered_map<std::string, JudgeToken> gold_index(std::span<const GoldLabel> gold) {
    std::unordered_map<std::string, JudgeToken> index;
    for (const auto& g : gold)
        if (!index.emplace(g.instance_id, g.token).second)
            throw Error(ErrorCode::MalformedInput, "duplicate gold instance: " + g.instance_id);
    return index;
}

double percent(std::size_t hits, std::size_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

double agreement_rate(std::span<const JudgmentRecord> judgments, std::span<const GoldLabel> gold) {
    auto index = gold_index(gold);
    std::set<std::string> seen;
    std::size_t hits = 0;
    for (const auto& j : judgments) {
        auto it = index.find(j.instance_id);
        if (it == index.end()) throw Error(ErrorCode::MissingGold, "no gold label for instance " + j.instance_id);
        if (!seen.insert(j.instance_id).second)
            throw Error(ErrorCode::MalformedInput, "judge has two records for instance " + j.instance_id);
        hits += it->second == j.token ? 1 : 0;
    }
    return percent(hits, judgments.size());
}

double agreement_rate(std::span<const Verdict> verdicts, std::span<const GoldLabel> gold) {
    auto index = gold_index(gold);
    std::size_t hits = 0;
    for (const auto& v : verdicts) {
        auto it = index.find(v.instance_id);
        if (it == index.end()) throw Error(ErrorCode::MissingGold, "no gold label for instance " + v.instance_id);
        hits += v.token && *v.token == it->second ? 1 : 0;
    }
    return percent(hits, verdicts.size());
}

std::vector<Verdict> majority_vote(std::span<const JudgmentRecord> judgments) {
    std::map<std::string, std::map<std::string, JudgeToken>> by_instance;
    for (const auto& j : judgments)
        if (!by_instance[j.instance_id].emplace(j.judge_id, j.token).second)
            throw Error(ErrorCode::MalformedInput, "duplicate record for (" + j.instance_id + ", " + j.judge_id + ")");
    std::vector<Verdict> out;
    out.reserve(by_instance.size());
    for (const auto& [instance, votes] : by_instance) {
        if (votes.size() < 2)
            throw Error(ErrorCode::TooFewJudges, "instance " + instance + " has fewer than 2 judges");
        std::map<JudgeToken, std::size_t> counts;
        for (const auto& [judge, token] : votes) ++counts[token];
        std::size_t best = 0, best_count = 0;
        std::optional<JudgeToken> winner;
        for (const auto& [token, count] : counts) {
            if (count > best) {
                best = count;
                winner = token;
                best_count = 1;
            } else if (count == best) {
                ++best_count;
            }
        }
        out.push_back({instance, best_count == 1 ? winner : std::nullopt});
    }
    return out;
}

AgreementReport analyze(std::span<const JudgmentRecord> judgments, std::span<const GoldLabel> gold,
                        const std::string& reference_judge) {
    AgreementReport rep;
    rep.reference_judge = reference_judge;
    std::map<std::string, std::vector<JudgmentRecord>> by_judge;
    for (const auto& j : judgments) by_judge[j.judge_id].push_back(j);
    for (const auto& [judge, records] : by_judge) rep.per_judge[judge] = agreement_rate(records, gold);

    auto verdicts = majority_vote(judgments);
    rep.instances = verdicts.size();
    rep.majority = agreement_rate(verdicts, gold);

    auto ref = by_judge.find(reference_judge);
    if (ref == by_judge.end()) throw Error(ErrorCode::InvalidArgument, "reference judge not found: " + reference_judge);
    std::unordered_map<std::string, JudgeToken> ref_tokens;
    for (const auto& r : ref->second) ref_tokens[r.instance_id] = r.token;
    for (const auto& [judge, records] : by_judge) {
        std::size_t shared = 0, hits = 0;
        for (const auto& r : records) {
            auto it = ref_tokens.find(r.instance_id);
            if (it == ref_tokens.end()) continue;
            ++shared;
            hits += it->second == r.token ? 1 : 0;
        }
        rep.pairwise[judge] = percent(hits, shared);
    }
    return rep;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (quoted) throw Error(ErrorCode::MalformedInput, "unterminated quote in CSV line");
    fields.push_back(std::move(cur));
    return fields;
}

namespace {

std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::vector<std::string>& header) {
    std::string line;
    std::vector<std::vector<std::string>> rows;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedInput, "CSV is empty");
    auto cols = split_csv_line(line);
    for (auto& c : cols) c = trim(c);
    if (!cols.empty() && cols[0].starts_with("\xEF\xBB\xBF")) cols[0].erase(0, 3);
    if (cols != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw Error(ErrorCode::MalformedInput, "CSV header must be " + expected);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::MalformedInput, "CSV line " + std::to_string(lineno) + " has " +
                                                       std::to_string(fields.size()) + " fields");
        for (auto& f : fields) f = trim(f);
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

std::vector<JudgmentRecord> read_judgments_csv(std::istream& in) {
    std::vector<JudgmentRecord> out;
    for (auto& row : read_csv(in, {"instance_id", "judge_id", "token"}))
        out.push_back({std::move(row[0]), std::move(row[1]), judge_token_from_string(row[2])});
    return out;
}

std::vector<GoldLabel> read_gold_csv(std::istream& in) {
    std::vector<GoldLabel> out;
    for (auto& row : read_csv(in, {"instance_id", "token"})) out.push_back({std::move(row[0]), judge_token_from_string(row[1])});
    return out;
}

}  // namespace guessarena::analysis
