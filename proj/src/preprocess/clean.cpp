#include "brqual/preprocess/clean.hpp"

#include "brqual/core/text.hpp"

#include <regex>

namespace brqual::preprocess {

namespace {

struct Pattern {
    SpanKind kind;
    std::regex regex;
    // Text kept in place of the match: concatenation of these capture groups.
    std::vector<int> keep;
    // Paired block markup: `regex` matches the opening tag and the block runs
    // to the next occurrence of `close`; the enclosed text is kept. Searching
    // for the literal keeps long blocks (crash logs) off the regex engine.
    std::string close;
};

const std::vector<Pattern>& patterns() {
    using std::regex;
    static const std::vector<Pattern> kPatterns = [] {
        const auto flags = regex::ECMAScript | regex::optimize;
        std::vector<Pattern> p;
        p.push_back({SpanKind::HtmlTag, regex(R"(<[^>\n]+>)", flags), {}, ""});
        p.push_back({SpanKind::Url, regex(R"(https?://\S+)", flags | regex::icase), {}, ""});
        p.push_back({SpanKind::Url, regex(R"(www\.\S+)", flags | regex::icase), {}, ""});
        p.push_back({SpanKind::Markdown, regex(R"(\{code(?::[^}\n]*)?\})", flags), {}, "{code}"});
        p.push_back({SpanKind::Markdown, regex(R"(\{noformat\})", flags), {}, "{noformat}"});
        p.push_back({SpanKind::Markdown, regex(R"(\{color:[^}\n]*\})", flags), {}, "{color}"});
        p.push_back({SpanKind::Markdown, regex(R"(\{quote\})", flags), {}, ""});
        p.push_back({SpanKind::Markdown, regex(R"(\*([^*\s](?:[^*\n]*[^*\s])?)\*)", flags), {1}, ""});
        p.push_back({SpanKind::Markdown,
                     regex(R"((^|[^A-Za-z0-9_])_([^_\s](?:[^_\n]*[^_\s])?)_(?=$|[^A-Za-z0-9_]))", flags),
                     {1, 2}, ""});
        return p;
    }();
    return kPatterns;
}

bool apply_paired(const Pattern& pattern, std::string& text, std::vector<RemovedSpan>& spans) {
    std::string out;
    std::size_t last = 0;
    std::size_t search = 0;
    bool matched = false;
    std::smatch m;
    while (search < text.size() &&
           std::regex_search(text.cbegin() + static_cast<std::ptrdiff_t>(search), text.cend(), m, pattern.regex)) {
        const auto open = search + static_cast<std::size_t>(m.position(0));
        const auto inner = open + static_cast<std::size_t>(m.length(0));
        const auto close = text.find(pattern.close, inner);
        if (close == std::string::npos) break;
        const auto stop = close + pattern.close.size();
        out.append(text, last, open - last);
        out.append(text, inner, close - inner);
        spans.push_back({pattern.kind, text.substr(open, stop - open)});
        last = search = stop;
        matched = true;
    }
    if (!matched) return false;
    out.append(text, last, std::string::npos);
    text = std::move(out);
    return true;
}

// Applies one pattern to the whole text; returns true if anything matched.
bool apply(const Pattern& pattern, std::string& text, std::vector<RemovedSpan>& spans) {
    if (!pattern.close.empty()) return apply_paired(pattern, text, spans);
    std::string out;
    auto begin = std::sregex_iterator(text.begin(), text.end(), pattern.regex);
    auto end = std::sregex_iterator();
    if (begin == end) return false;
    std::size_t last = 0;
    for (auto it = begin; it != end; ++it) {
        const auto& m = *it;
        const auto pos = static_cast<std::size_t>(m.position(0));
        out.append(text, last, pos - last);
        std::string kept;
        std::string original = m.str(0);
        for (int g : pattern.keep) kept += m.str(g);
        // The italic pattern consumes one leading boundary character which is
        // not part of the markup itself.
        if (pattern.keep.size() == 2) original = original.substr(m.length(1));
        spans.push_back({pattern.kind, original});
        out += kept;
        last = pos + static_cast<std::size_t>(m.length(0));
    }
    out.append(text, last, std::string::npos);
    text = std::move(out);
    return true;
}

std::string normalize_layout(std::string_view text) {
    std::vector<std::string> lines;
    for (auto line : text::split_lines(text)) {
        std::string collapsed;
        bool space = false;
        for (char c : text::trim(line)) {
            if (c == ' ' || c == '\t') {
                space = true;
                continue;
            }
            if (space) collapsed.push_back(' ');
            space = false;
            collapsed.push_back(c);
        }
        lines.push_back(std::move(collapsed));
    }
    return text::trim_copy(text::join(lines, "\n"));
}

}  // namespace

CleanedText clean_text(std::string_view raw) {
    CleanedText result;
    result.text = std::string(raw);
    // Removing markup can expose new matches (e.g. a URL inside a code block
    // delimiter); iterate to a fixed point.
    for (int pass = 0; pass < 8; ++pass) {
        bool changed = false;
        for (const auto& p : patterns()) changed = apply(p, result.text, result.removed_spans) || changed;
        if (!changed) break;
    }
    if (!result.removed_spans.empty()) result.text = normalize_layout(result.text);
    return result;
}

bool contains_markup(std::string_view text) {
    const std::string s(text);
    for (const auto& p : patterns()) {
        std::smatch m;
        if (!std::regex_search(s, m, p.regex)) continue;
        if (p.close.empty()) return true;
        const auto inner = static_cast<std::size_t>(m.position(0) + m.length(0));
        if (s.find(p.close, inner) != std::string::npos) return true;
    }
    return false;
}

}  // namespace brqual::preprocess
