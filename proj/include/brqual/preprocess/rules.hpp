#pragma once

#include "brqual/core/model.hpp"
#include "brqual/preprocess/segment.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace brqual::preprocess {

struct HeuristicSignal {
    SentenceSpan sentence;
    std::map<SectionKind, double> section_votes;
    std::vector<std::string> matched_cues;  // "<category>:<cue>"

    /// Winning section when its vote is >= threshold and strictly above the
    /// runner-up; nullopt otherwise (ties stay unassigned).
    std::optional<SectionKind> winner(double threshold) const;
};

struct HeaderMatch {
    SectionKind section;
    std::size_t content_offset;  // start of same-line content after the header
};

/// Header grammar and cue lexicons, loaded from a versioned JSON rules file.
class RuleSet {
public:
    static RuleSet load(const std::filesystem::path& path);
    /// The rules shipped under data/rules.
    static const RuleSet& builtin();

    /// Recognises a header line: optional wiki/markdown heading markup, a
    /// header phrase, then ':' or '-' or end of line.
    std::optional<HeaderMatch> match_header(std::string_view line) const;

    HeuristicSignal score(const SentenceSpan& sentence) const;

    double threshold() const { return threshold_; }
    const std::string& version() const { return version_; }

private:
    using Phrase = std::vector<std::string>;  // token sequence

    struct Header {
        SectionKind section;
        std::string phrase;  // lowercase
    };

    std::string version_;
    std::vector<Header> headers_;  // longest phrase first
    std::vector<std::string> action_verbs_;
    std::vector<Phrase> failure_verbs_;
    std::vector<Phrase> negations_;
    std::vector<Phrase> modals_;
    std::vector<Phrase> os_names_;
    std::vector<Phrase> editions_;
    std::vector<std::regex> version_patterns_;
    std::vector<std::string> domain_terms_;
    double threshold_ = 1.0;
    double list_marker_weight_ = 1.0;
    double action_verb_weight_ = 1.0;
    double environment_weight_ = 1.0;
    double failure_weight_ = 1.0;
    double negation_weight_ = 0.5;
    double modal_weight_ = 1.0;
    double domain_weight_ = 0.5;
};

}  // namespace brqual::preprocess
