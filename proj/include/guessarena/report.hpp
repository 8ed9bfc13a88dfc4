#pragma once

// Report files: JSON per run plus Markdown tables, single or merged.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "guessarena/metrics.hpp"
#include "guessarena/transcript.hpp"

namespace guessarena::metrics {

struct ReportFile {
    MetricReport report;
    std::string domain;
    std::string player;
    std::string regime;
    engine::Provenance provenance;
};

nlohmann::ordered_json to_json(const ReportFile& rf);
ReportFile report_from_json(const nlohmann::json& j);
ReportFile load_report(const std::filesystem::path& path);

/// Summary table for one report plus the per-round breakdown.
std::string render_markdown(const ReportFile& rf);

/// Model x domain grid of composite scores with an Avg. column.
/// Column best is bold, runner-up underlined; missing cells show "-".
std::string render_merged_markdown(const std::vector<ReportFile>& reports);

/// Recomputes the report from transcript records (all from one deck run).
ReportFile score_transcripts(const std::vector<engine::TranscriptRecord>& records, const MetricParams& params);

}  // namespace guessarena::metrics
