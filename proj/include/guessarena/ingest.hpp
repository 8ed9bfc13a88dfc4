#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guessarena/core.hpp"

namespace guessarena::ingest {

enum class SourceFormat { PlainText, Html, PdfPreExtracted };

std::string_view to_string(SourceFormat f) noexcept;

struct SourceDocument {
    std::string path_or_url;
    SourceFormat format = SourceFormat::PlainText;
    std::string content;
    std::map<std::string, std::string> metadata;  // at least "title" and "source"

    std::string doc_id() const;
};

struct TextUnit {
    std::string doc_id;
    int seq = 0;
    std::string text;
    std::size_t start = 0;  // char_span within SourceDocument::content, half-open
    std::size_t end = 0;
};

inline constexpr std::size_t kDefaultMaxUnitChars = 4000;

/// Strips tags, comments, script and style blocks; decodes entities.
/// Block-level elements become line breaks.
std::string html_to_text(std::string_view html);

/// Infers the format from the file extension (.txt/.md plain, .html/.htm html,
/// .pdf.txt pre-extracted). Binary .pdf is rejected.
SourceFormat infer_format(std::string_view path);

/// Loads a local file or an http(s) URL and extracts plain text.
SourceDocument load_document(const std::string& path_or_url,
                             std::optional<SourceFormat> format_hint = std::nullopt);

/// Builds a document from in-memory content (used by load_document and tests).
SourceDocument make_document(std::string path_or_url, SourceFormat format, std::string_view raw);

/// Every regular file in `dir`, sorted by filename.
std::vector<SourceDocument> load_directory(const std::filesystem::path& dir);

std::vector<TextUnit> segment(const SourceDocument& doc, std::size_t max_unit_chars = kDefaultMaxUnitChars);

}  // namespace guessarena::ingest
