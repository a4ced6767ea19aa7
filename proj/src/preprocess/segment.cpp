#include "brqual/preprocess/segment.hpp"

#include "brqual/core/text.hpp"

#include <array>
#include <cctype>

namespace brqual::preprocess {

namespace {

constexpr std::array<std::string_view, 4> kAbbreviations{"e.g.", "i.e.", "etc.", "vs."};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}'; }

bool opens_sentence(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isupper(u) || std::isdigit(u) || c == '-' || c == '*' || c == '#';
}

// Word ending at `end` (exclusive), scanning back to whitespace.
std::string_view word_before(std::string_view line, std::size_t end) {
    std::size_t begin = end;
    while (begin > 0 && !is_space(line[begin - 1])) --begin;
    return line.substr(begin, end - begin);
}

bool protected_token(std::string_view word) {
    const auto lower = text::to_lower(word);
    for (auto abbr : kAbbreviations) {
        if (lower.size() >= abbr.size() && lower.compare(lower.size() - abbr.size(), abbr.size(), abbr) == 0) {
            // Require the abbreviation to start the word (after opening punctuation).
            const auto head = std::string_view(lower).substr(0, lower.size() - abbr.size());
            bool only_punct = true;
            for (char c : head) only_punct = only_punct && !std::isalnum(static_cast<unsigned char>(c));
            if (only_punct) return true;
        }
    }
    return false;
}

void push_span(std::string_view source, std::size_t begin, std::size_t end, std::vector<SentenceSpan>& out) {
    while (begin < end && is_space(source[begin])) ++begin;
    while (end > begin && is_space(source[end - 1])) --end;
    if (begin < end) out.push_back({std::string(source.substr(begin, end - begin)), begin, end});
}

void segment_line(std::string_view source, std::size_t line_begin, std::size_t line_end,
                  std::vector<SentenceSpan>& out) {
    const auto line = source.substr(line_begin, line_end - line_begin);
    std::size_t span_begin = 0;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c != '.' && c != '!' && c != '?') {
            ++i;
            continue;
        }
        std::size_t stop = i;
        while (stop < line.size() && (line[stop] == '.' || line[stop] == '!' || line[stop] == '?')) ++stop;
        while (stop < line.size() && is_closer(line[stop])) ++stop;
        std::size_t next = stop;
        while (next < line.size() && is_space(line[next])) ++next;
        const bool boundary = next > stop && next < line.size() && opens_sentence(line[next]);
        if (boundary) {
            const auto word = word_before(line, stop);
            const auto so_far = text::trim(line.substr(span_begin, stop - span_begin));
            const bool bare_marker = text::list_marker(std::string(so_far) + " x").size() == so_far.size() + 1;
            if (!protected_token(word) && !bare_marker) {
                push_span(source, line_begin + span_begin, line_begin + stop, out);
                span_begin = next;
            }
        }
        i = stop;
    }
    push_span(source, line_begin + span_begin, line_end, out);
}

}  // namespace

std::vector<SentenceSpan> segment_sentences(std::string_view text) {
    std::vector<SentenceSpan> out;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        auto end = text.find('\n', begin);
        if (end == std::string_view::npos) end = text.size();
        segment_line(text, begin, end, out);
        begin = end + 1;
    }
    return out;
}

std::vector<SentenceSpan> segment_sentences(const CleanedText& cleaned) { return segment_sentences(cleaned.text); }

}  // namespace brqual::preprocess
