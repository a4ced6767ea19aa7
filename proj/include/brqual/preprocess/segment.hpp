#pragma once

#include "brqual/preprocess/clean.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace brqual::preprocess {

struct SentenceSpan {
    std::string text;
    std::size_t start = 0;  // offsets into the segmented text, end exclusive
    std::size_t end = 0;

    bool operator==(const SentenceSpan&) const = default;
};

/// Rule segmenter. Every line break ends a span; within a line a span ends
/// after [.!?] (plus closing quotes/brackets) when followed by whitespace and
/// an uppercase letter, a digit or a list-marker character. Version strings
/// and the abbreviations e.g., i.e., etc., vs. never end a span, and a bare
/// leading list marker ("1.") stays attached to its item. Spans are trimmed.
std::vector<SentenceSpan> segment_sentences(std::string_view text);
std::vector<SentenceSpan> segment_sentences(const CleanedText& cleaned);

}  // namespace brqual::preprocess
