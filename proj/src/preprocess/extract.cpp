#include "brqual/preprocess/extract.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/json.hpp"
#include "brqual/core/text.hpp"
#include "brqual/preprocess/segment.hpp"

#include <algorithm>
#include <set>

namespace brqual::preprocess {

namespace {

std::string extraction_source(std::string_view summary, std::string_view description) {
    std::string s(summary);
    s += "\n";
    s += description;
    return s;
}

// Removes a surrounding ``` fence (with optional language tag).
std::string_view strip_fence(std::string_view completion) {
    auto t = text::trim(completion);
    if (t.substr(0, 3) != "```") return t;
    auto first_newline = t.find('\n');
    if (first_newline == std::string_view::npos) return t;
    t = t.substr(first_newline + 1);
    auto close = t.rfind("```");
    if (close != std::string_view::npos) t = t.substr(0, close);
    return text::trim(t);
}

bool any_absent(const StructuredReport& r) {
    return std::any_of(kAllSections.begin(), kAllSections.end(),
                       [&](SectionKind k) { return r.section(k).provenance == Provenance::Absent; });
}

struct Range {
    std::size_t begin;
    std::size_t end;
};

}  // namespace

StructuredReport parse_extraction(const std::string& key, std::string_view completion, std::string_view source) {
    Json j;
    try {
        j = Json::parse(strip_fence(completion));
    } catch (const Json::exception&) {
        throw MalformedCompletion("extraction for " + key + ": completion is not JSON");
    }
    if (!j.is_object()) throw MalformedCompletion("extraction for " + key + ": completion is not a JSON object");
    auto report = StructuredReport::blank(key);
    for (const auto& [name, value] : j.items()) {
        auto kind = parse_section_kind(name);
        if (!kind) throw MalformedCompletion("extraction for " + key + ": unknown section '" + name + "'");
        if (value.is_null()) continue;
        if (!value.is_string()) throw MalformedCompletion("extraction for " + key + ": '" + name + "' is not a string");
        auto content = text::trim_copy(value.get<std::string>());
        if (content.empty()) continue;
        if (!text::fuzzy_contained(content, source)) {
            throw MalformedCompletion("extraction for " + key + ": '" + name + "' does not occur in the report text");
        }
        report.set_section(*kind, std::move(content), Provenance::LlmExtracted);
    }
    return report;
}

StructuredReport llm_extract_sections(const std::string& key, std::string_view summary,
                                      const CleanedText& description, provider::Gateway& gateway,
                                      const improve::PromptCatalog& catalog) {
    if (text::trim(description.text).empty()) return StructuredReport::blank(key);
    const auto& tmpl = catalog.get(std::string(kExtractPromptId));
    provider::ChatRequest request;
    request.prompt_id = tmpl.prompt_id;
    request.system_text = tmpl.system_text;
    request.user_text = improve::render(tmpl.body, {{"summary", std::string(summary)}, {"description", description.text}});
    const auto completion = gateway.chat(request);
    return parse_extraction(key, completion, extraction_source(summary, description.text));
}

StructuredReport heuristic_extract_sections(std::string_view summary, const CleanedText& description,
                                            StructuredReport partial, const RuleSet& rules) {
    if (!any_absent(partial)) return partial;
    std::set<SectionKind> open;
    for (auto k : kAllSections) {
        if (partial.section(k).provenance == Provenance::Absent) open.insert(k);
    }

    // Stage 1: header regions.
    const std::string_view desc = description.text;
    struct Region {
        SectionKind kind;
        std::size_t header_begin;
        std::size_t content_begin;
        std::size_t end;
    };
    std::vector<Region> regions;
    for (std::size_t begin = 0; begin <= desc.size();) {
        auto end = desc.find('\n', begin);
        if (end == std::string_view::npos) end = desc.size();
        if (auto m = rules.match_header(desc.substr(begin, end - begin))) {
            if (!regions.empty()) regions.back().end = begin;
            regions.push_back({m->section, begin, begin + m->content_offset, desc.size()});
        }
        begin = end + 1;
    }
    std::vector<Range> consumed;
    for (const auto& r : regions) {
        consumed.push_back({r.header_begin, r.end});
        if (!open.count(r.kind) || partial.section(r.kind).provenance != Provenance::Absent) continue;
        auto content = text::trim_copy(desc.substr(r.content_begin, r.end - r.content_begin));
        if (content.empty()) continue;
        partial.set_section(r.kind, std::move(content), Provenance::HeaderMatched);
    }

    // Stage 2: cue voting over the remaining sentences.
    std::vector<SentenceSpan> sentences;
    for (auto& s : segment_sentences(summary)) sentences.push_back(std::move(s));
    for (auto& s : segment_sentences(desc)) {
        const bool inside = std::any_of(consumed.begin(), consumed.end(),
                                        [&](const Range& r) { return s.start >= r.begin && s.start < r.end; });
        if (!inside) sentences.push_back(std::move(s));
    }
    std::map<SectionKind, std::vector<std::string>> assigned;
    std::set<std::string> seen;
    for (const auto& s : sentences) {
        if (!seen.insert(s.text).second) continue;
        const bool already_used = std::any_of(kAllSections.begin(), kAllSections.end(), [&](SectionKind k) {
            const auto& c = partial.section(k).content;
            return !c.empty() && c.find(s.text) != std::string::npos;
        });
        if (already_used) continue;
        auto winner = rules.score(s).winner(rules.threshold());
        if (!winner || partial.section(*winner).provenance != Provenance::Absent) continue;
        assigned[*winner].push_back(s.text);
    }
    for (auto& [kind, parts] : assigned) {
        const auto separator = kind == SectionKind::StepsToReproduce ? "\n" : " ";
        partial.set_section(kind, text::join(parts, separator), Provenance::HeuristicClassified);
    }
    return partial;
}

std::string metadata_block(const RawBugReport& raw) {
    std::vector<std::string> lines;
    if (!raw.affected_versions.empty()) lines.push_back("Affects: " + text::join(raw.affected_versions, ", "));
    if (raw.priority && !text::trim(*raw.priority).empty()) lines.push_back("Priority: " + text::trim_copy(*raw.priority));
    return text::join(lines, "\n");
}

StructuredReport enrich_metadata(StructuredReport report, const RawBugReport& raw) {
    auto block = metadata_block(raw);
    if (block.empty()) return report;
    const auto& env = report.section(SectionKind::Environment);
    if (env.provenance == Provenance::Absent) {
        report.set_section(SectionKind::Environment, std::move(block), Provenance::MetadataEnriched);
    } else {
        report.set_section(SectionKind::Environment, env.content + "\n" + block, env.provenance);
    }
    return report;
}

PreprocessResult preprocess_report(const RawBugReport& raw, provider::Gateway* gateway,
                                   const improve::PromptCatalog* catalog, const RuleSet& rules) {
    PreprocessResult result;
    const auto summary = clean_text(raw.summary);
    const auto description = clean_text(raw.description);

    auto report = StructuredReport::blank(raw.key);
    if (gateway && catalog) {
        try {
            report = llm_extract_sections(raw.key, summary.text, description, *gateway, *catalog);
        } catch (const MalformedCompletion& e) {
            result.warnings.push_back(std::string("llm extraction rejected: ") + e.what());
        } catch (const ProviderError& e) {
            result.warnings.push_back(std::string("llm extraction failed: ") + e.what());
        }
    }
    if (any_absent(report)) report = heuristic_extract_sections(summary.text, description, std::move(report), rules);
    const bool any_filled = std::any_of(kAllSections.begin(), kAllSections.end(), [&](SectionKind k) {
        return report.section(k).provenance != Provenance::Absent;
    });
    if (!any_filled) result.warnings.push_back("no section could be extracted");
    report = enrich_metadata(std::move(report), raw);
    for (auto& problem : validate_structured_report(report, ReportOrigin::Preprocessor)) {
        result.warnings.push_back("invalid structured report: " + problem);
    }
    result.report = std::move(report);
    return result;
}

}  // namespace brqual::preprocess
