#include "guessarena/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "guessarena/http.hpp"

namespace guessarena::ingest {

std::string_view to_string(SourceFormat f) noexcept {
    switch (f) {
        case SourceFormat::PlainText: return "plain_text";
        case SourceFormat::Html: return "html";
        case SourceFormat::PdfPreExtracted: return "pdf_pre_extracted";
    }
    return "plain_text";
}

std::string SourceDocument::doc_id() const {
    auto it = metadata.find("title");
    std::string title = it != metadata.end() ? it->second : std::string{};
    return title.empty() ? path_or_url : title;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool iequals_at(std::string_view s, std::size_t pos, std::string_view word) {
    if (pos + word.size() > s.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[pos + i])) != word[i]) return false;
    return true;
}

std::size_t ifind(std::string_view s, std::string_view word, std::size_t from) {
    for (std::size_t i = from; i + word.size() <= s.size(); ++i)
        if (iequals_at(s, i, word)) return i;
    return std::string_view::npos;
}

constexpr std::array kBlockTags = {"p",  "div", "br", "li",   "ul",      "ol",      "h1",         "h2",
                                   "h3", "h4",  "h5", "h6",   "tr",      "table",   "section",    "article",
                                   "header", "footer", "nav", "aside", "blockquote", "pre", "hr", "dd",
                                   "dt", "dl", "title", "main", "figure", "figcaption", "form", "body"};

constexpr std::array kSkippedBlocks = {"script", "style", "noscript", "template", "head"};

bool is_block(std::string_view tag) {
    return std::find(kBlockTags.begin(), kBlockTags.end(), tag) != kBlockTags.end();
}

void append_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Decodes the entity starting at s[i] == '&'. Returns characters consumed, 0 if not an entity.
std::size_t decode_entity(std::string_view s, std::size_t i, std::string& out) {
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) return 0;
    std::string_view name = s.substr(i + 1, semi - i - 1);
    if (name.empty()) return 0;
    if (name[0] == '#') {
        char32_t cp = 0;
        bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
        std::string_view digits = name.substr(hex ? 2 : 1);
        if (digits.empty()) return 0;
        for (char c : digits) {
            int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                    : hex && std::isxdigit(static_cast<unsigned char>(c))
                        ? std::tolower(static_cast<unsigned char>(c)) - 'a' + 10
                        : -1;
            if (v < 0) return 0;
            cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
        }
        append_utf8(cp == 0xA0 ? U' ' : cp, out);
        return semi - i + 1;
    }
    static const std::pair<std::string_view, std::string_view> kNamed[] = {
        {"amp", "&"},     {"lt", "<"},       {"gt", ">"},       {"quot", "\""},   {"apos", "'"},
        {"nbsp", " "},    {"mdash", "—"}, {"ndash", "–"}, {"hellip", "…"},
        {"rsquo", "’"}, {"lsquo", "‘"}, {"ldquo", "“"}, {"rdquo", "”"},
        {"copy", "©"}, {"reg", "®"}, {"trade", "™"}, {"deg", "°"},
        {"middot", "·"}, {"bull", "•"}, {"euro", "€"}, {"times", "×"}, {"minus", "−"},
        {"laquo", "«"}, {"raquo", "»"}, {"szlig", "ß"}, {"ccedil", "ç"}, {"ntilde", "ñ"},
        {"aacute", "á"}, {"agrave", "à"}, {"auml", "ä"}, {"eacute", "é"}, {"egrave", "è"},
        {"iacute", "í"}, {"oacute", "ó"}, {"ouml", "ö"}, {"uacute", "ú"}, {"uuml", "ü"},
    };
    for (const auto& [n, v] : kNamed) {
        if (name == n) {
            out += v;
            return semi - i + 1;
        }
    }
    return 0;
}

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] == '&') {
            if (auto used = decode_entity(s, i, out)) {
                i += used;
                continue;
            }
        }
        out.push_back(s[i++]);
    }
    return out;
}

// Collapses horizontal whitespace, trims each line and keeps at most one blank line in a row.
std::string tidy_lines(std::string_view text) {
    std::string out;
    std::istringstream in{std::string(text)};
    std::string line;
    bool blank_pending = false;
    while (std::getline(in, line)) {
        std::string collapsed;
        bool space = false;
        for (char c : line) {
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
                space = !collapsed.empty();
                continue;
            }
            if (space) collapsed.push_back(' ');
            space = false;
            collapsed.push_back(c);
        }
        if (collapsed.empty()) {
            blank_pending = !out.empty();
            continue;
        }
        if (!out.empty()) out += blank_pending ? "\n\n" : "\n";
        blank_pending = false;
        out += collapsed;
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableSource, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::UnreadableSource, "read failure on " + path.string());
    return ss.str();
}

std::string extract_title(std::string_view html) {
    auto open = ifind(html, "<title", 0);
    if (open == std::string_view::npos) return {};
    auto gt = html.find('>', open);
    if (gt == std::string_view::npos) return {};
    auto close = ifind(html, "</title", gt);
    if (close == std::string_view::npos) return {};
    return tidy_lines(decode_entities(html.substr(gt + 1, close - gt - 1)));
}

}  // namespace

std::string html_to_text(std::string_view html) {
    std::string raw;
    raw.reserve(html.size());
    std::size_t i = 0;
    while (i < html.size()) {
        if (html[i] != '<') {
            auto next = html.find('<', i);
            if (next == std::string_view::npos) next = html.size();
            raw += decode_entities(html.substr(i, next - i));
            i = next;
            continue;
        }
        if (html.substr(i, 4) == "<!--") {
            auto end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        auto gt = html.find('>', i);
        if (gt == std::string_view::npos) {
            // Unterminated tag: treat the rest as text.
            raw += decode_entities(html.substr(i));
            break;
        }
        std::string_view inner = html.substr(i + 1, gt - i - 1);
        bool closing = !inner.empty() && inner[0] == '/';
        if (closing) inner.remove_prefix(1);
        std::size_t name_len = 0;
        while (name_len < inner.size() && (std::isalnum(static_cast<unsigned char>(inner[name_len])) != 0))
            ++name_len;
        std::string tag = lower(inner.substr(0, name_len));
        i = gt + 1;
        if (!closing && std::find(kSkippedBlocks.begin(), kSkippedBlocks.end(), tag) != kSkippedBlocks.end()) {
            auto end = ifind(html, "</" + tag, i);
            if (end == std::string_view::npos) {
                i = html.size();
            } else {
                auto end_gt = html.find('>', end);
                i = end_gt == std::string_view::npos ? html.size() : end_gt + 1;
            }
            raw += "\n\n";
            continue;
        }
        if (tag == "br") {
            raw += "\n";
        } else if (is_block(tag)) {
            raw += "\n\n";
        } else if (tag == "td" || tag == "th") {
            raw += " ";
        }
    }
    return tidy_lines(raw);
}

SourceFormat infer_format(std::string_view path) {
    std::string p = lower(path);
    auto ends = [&](std::string_view suffix) { return p.ends_with(suffix); };
    if (ends(".pdf.txt")) return SourceFormat::PdfPreExtracted;
    if (ends(".html") || ends(".htm") || ends(".xhtml")) return SourceFormat::Html;
    if (ends(".txt") || ends(".md") || ends(".markdown") || ends(".text")) return SourceFormat::PlainText;
    if (ends(".pdf"))
        throw Error(ErrorCode::UnsupportedFormat,
                    "binary PDF is not parsed; extract its text first and pass it as pdf_pre_extracted: " +
                        std::string(path));
    throw Error(ErrorCode::UnsupportedFormat, "cannot infer document format from " + std::string(path));
}

SourceDocument make_document(std::string path_or_url, SourceFormat format, std::string_view raw) {
    if (format == SourceFormat::PdfPreExtracted && raw.starts_with("%PDF"))
        throw Error(ErrorCode::UnsupportedFormat, "binary PDF content supplied as pre-extracted text");
    SourceDocument doc;
    doc.path_or_url = std::move(path_or_url);
    doc.format = format;
    std::string title;
    if (format == SourceFormat::Html) {
        doc.content = html_to_text(raw);
        title = extract_title(raw);
    } else {
        doc.content = tidy_lines(raw);
    }
    if (doc.content.empty())
        throw Error(ErrorCode::EmptyAfterExtraction, "no text left after extraction: " + doc.path_or_url);
    if (title.empty()) {
        if (is_url(doc.path_or_url)) {
            title = doc.path_or_url;
        } else {
            title = std::filesystem::path(doc.path_or_url).filename().string();
        }
    }
    doc.metadata["title"] = title;
    doc.metadata["source"] = doc.path_or_url;
    doc.metadata["format"] = std::string(to_string(format));
    return doc;
}

SourceDocument load_document(const std::string& path_or_url, std::optional<SourceFormat> format_hint) {
    std::string raw;
    if (is_url(path_or_url)) {
        HttpResponse res;
        try {
            res = make_default_transport()->get(path_or_url, std::chrono::seconds(30));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::UnreadableSource, path_or_url + ": " + e.what());
        }
        if (res.status < 200 || res.status >= 300)
            throw Error(ErrorCode::UnreadableSource, path_or_url + ": HTTP " + std::to_string(res.status));
        raw = std::move(res.body);
        if (!format_hint) {
            try {
                format_hint = infer_format(path_or_url);
            } catch (const Error&) {
                format_hint = SourceFormat::Html;
            }
        }
    } else {
        if (!format_hint) format_hint = infer_format(path_or_url);
        raw = read_file(path_or_url);
    }
    return make_document(path_or_url, *format_hint, raw);
}

std::vector<SourceDocument> load_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw Error(ErrorCode::UnreadableSource, "not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<SourceDocument> docs;
    docs.reserve(files.size());
    for (const auto& f : files) docs.push_back(load_document(f.string()));
    return docs;
}

namespace {

struct Span {
    std::size_t start;
    std::size_t end;
};

std::vector<Span> paragraphs(std::string_view text) {
    std::vector<Span> out;
    std::size_t i = 0;
    while (i < text.size()) {
        // Skip blank lines and leading whitespace.
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        std::size_t end = i;
        // A paragraph ends at a line that is empty or whitespace-only.
        while (i < text.size()) {
            auto nl = text.find('\n', i);
            std::size_t line_end = nl == std::string_view::npos ? text.size() : nl;
            std::string_view line = text.substr(i, line_end - i);
            bool blank = std::all_of(line.begin(), line.end(),
                                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
            if (blank) break;
            end = line_end;
            i = nl == std::string_view::npos ? text.size() : nl + 1;
        }
        while (end > start && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
        out.push_back({start, end});
    }
    return out;
}

std::vector<Span> sentences(std::string_view text, Span para) {
    std::vector<Span> out;
    std::size_t start = para.start;
    for (std::size_t i = para.start; i < para.end; ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == para.end || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
            out.push_back({start, i + 1});
            start = i + 1;
            while (start < para.end && std::isspace(static_cast<unsigned char>(text[start]))) ++start;
            i = start - 1;
        }
    }
    if (start < para.end) out.push_back({start, para.end});
    return out;
}

// Greedy merge of consecutive spans while the covering span stays within `cap`.
std::vector<Span> merge_greedy(const std::vector<Span>& parts, std::size_t cap) {
    std::vector<Span> out;
    for (const auto& p : parts) {
        if (!out.empty() && p.end - out.back().start <= cap) {
            out.back().end = p.end;
        } else {
            out.push_back(p);
        }
    }
    return out;
}

}  // namespace

std::vector<TextUnit> segment(const SourceDocument& doc, std::size_t max_unit_chars) {
    if (max_unit_chars < 200) throw Error(ErrorCode::InvalidArgument, "max_unit_chars must be at least 200");
    const std::string& text = doc.content;
    std::vector<Span> units;
    std::vector<Span> pending;  // short paragraphs awaiting merge
    auto flush = [&] {
        auto merged = merge_greedy(pending, max_unit_chars);
        units.insert(units.end(), merged.begin(), merged.end());
        pending.clear();
    };
    for (const auto& para : paragraphs(text)) {
        if (para.end - para.start <= max_unit_chars) {
            pending.push_back(para);
            continue;
        }
        flush();
        std::vector<Span> pieces;
        for (const auto& s : sentences(text, para)) {
            if (s.end - s.start <= max_unit_chars) {
                pieces.push_back(s);
                continue;
            }
            for (std::size_t at = s.start; at < s.end; at += max_unit_chars)
                pieces.push_back({at, std::min(at + max_unit_chars, s.end)});
        }
        auto merged = merge_greedy(pieces, max_unit_chars);
        units.insert(units.end(), merged.begin(), merged.end());
    }
    flush();

    std::vector<TextUnit> out;
    out.reserve(units.size());
    const std::string id = doc.doc_id();
    int seq = 0;
    for (const auto& u : units) out.push_back({id, seq++, text.substr(u.start, u.end - u.start), u.start, u.end});
    return out;
}

}  // namespace guessarena::ingest
