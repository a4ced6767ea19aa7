#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace brqual::preprocess {

enum class SpanKind { Url, Markdown, HtmlTag };

struct RemovedSpan {
    SpanKind kind;
    std::string original;

    bool operator==(const RemovedSpan&) const = default;
};

struct CleanedText {
    std::string text;
    std::vector<RemovedSpan> removed_spans;
};

/// Strips HTML tags, URLs (http(s):// and www.) and Jira wiki markup
/// ({code}, {noformat}, {color:..}, {quote}, *bold*, _italic_) while keeping
/// the inner text of paired markup. Each regex match is recorded as one
/// removed span. When anything was removed, horizontal whitespace left
/// behind is collapsed and lines are trimmed; markup-free input is returned
/// unchanged.
CleanedText clean_text(std::string_view raw);

/// True when the text still contains a substring any cleaning pattern would
/// remove.
bool contains_markup(std::string_view text);

}  // namespace brqual::preprocess
