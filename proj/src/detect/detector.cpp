#include "brqual/detect/detector.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/text.hpp"

#include <cstdio>

namespace brqual::detect {

namespace {

std::string score_text(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string_view strip_fence(std::string_view completion) {
    auto t = text::trim(completion);
    if (t.substr(0, 3) != "```") return t;
    auto nl = t.find('\n');
    if (nl == std::string_view::npos) return t;
    t = t.substr(nl + 1);
    auto close = t.rfind("```");
    if (close != std::string_view::npos) t = t.substr(0, close);
    return t;
}

std::vector<std::string_view> split_fields(std::string_view line, std::size_t max_fields) {
    std::vector<std::string_view> out;
    while (out.size() + 1 < max_fields) {
        auto bar = line.find('|');
        if (bar == std::string_view::npos) break;
        out.push_back(text::trim(line.substr(0, bar)));
        line = line.substr(bar + 1);
    }
    out.push_back(text::trim(line));
    return out;
}

}  // namespace

std::vector<IssueFlag> heuristic_check(const StructuredReport& report) {
    std::vector<IssueFlag> flags;
    for (auto kind : kRequiredSections) {
        const auto& content = report.section(kind).content;
        if (text::is_substantive(content)) continue;
        std::string detail = content.empty() ? std::string(to_string(kind)) + " section is missing"
                                             : std::string(to_string(kind)) + " section has fewer than " +
                                                   std::to_string(text::kSubstanceThreshold) + " words";
        flags.push_back({kind, IssueClass::Missing, std::move(detail), FlagSource::Heuristic});
    }
    return flags;
}

AnalyzerOutput parse_analysis(std::string_view completion) {
    AnalyzerOutput out;
    bool recognised = false;
    for (auto raw : text::split_lines(strip_fence(completion))) {
        auto line = text::trim(raw);
        if (line.empty()) continue;
        if (line == "NO_ISSUES") {
            recognised = true;
            continue;
        }
        if (text::istarts_with(line, "RECOMMENDATION|")) {
            recognised = true;
            auto rec = text::trim_copy(line.substr(15));
            if (!rec.empty()) out.recommendations.push_back(std::move(rec));
            continue;
        }
        if (text::istarts_with(line, "FLAG|")) {
            recognised = true;
            auto fields = split_fields(line.substr(5), 3);
            if (fields.size() < 3) {
                out.warnings.push_back("analyzer flag line has too few fields: " + std::string(line));
                continue;
            }
            auto section = parse_section_kind(fields[0]);
            auto cls = parse_issue_class(fields[1]);
            if (!section || !cls) {
                out.warnings.push_back("analyzer flag dropped: " + std::string(line));
                continue;
            }
            merge_flag(out.flags, {*section, *cls, std::string(fields[2]), FlagSource::LlmAnalyzer});
        }
    }
    if (!recognised) throw MalformedCompletion("analyzer completion does not follow the FLAG/RECOMMENDATION protocol");
    return out;
}

std::string format_prior(const AnalyzerPrior& prior) {
    std::string out = "Classifier low-quality score: " + score_text(prior.classifier_score) + " (threshold " +
                      score_text(prior.threshold) + ")\n";
    if (prior.flags.empty()) {
        out += "Flags: none\n";
        return out;
    }
    out += "Flags:\n";
    for (const auto& f : prior.flags) {
        out += "- ";
        out += short_name(f.section);
        out += " ";
        out += to_string(f.issue_class);
        out += " (";
        out += to_string(f.source);
        out += "): ";
        out += f.detail;
        out += "\n";
    }
    return out;
}

AnalyzerOutput llm_analyze(const StructuredReport& report, const AnalyzerPrior& prior, provider::Gateway& gateway,
                           const improve::PromptCatalog& catalog) {
    const auto& tmpl = catalog.get(std::string(kAnalyzePromptId));
    provider::ChatRequest request;
    request.prompt_id = tmpl.prompt_id;
    request.system_text = tmpl.system_text;
    request.user_text = improve::render(tmpl.body, {{"report", format_sections(report)}, {"prior", format_prior(prior)}});
    const auto completion = gateway.chat(request);
    try {
        return parse_analysis(completion);
    } catch (const MalformedCompletion& e) {
        AnalyzerOutput out;
        out.warnings.emplace_back(e.what());
        return out;
    }
}

DetectionResult detect_report(const StructuredReport& report, std::string_view classifier_input,
                              const ClassifierModel& model, provider::Gateway& gateway,
                              const improve::PromptCatalog& catalog) {
    DetectionResult result;
    result.key = report.key;
    result.classifier_score = classify(model, classifier_input);
    const bool score_gate = result.classifier_score >= model.threshold;
    const auto heuristic = heuristic_check(report);

    if (score_gate) {
        for (auto kind : kRequiredSections) {
            merge_flag(result.flags, {kind, IssueClass::Enhance,
                                      "classifier low-quality score " + score_text(result.classifier_score),
                                      FlagSource::Classifier});
        }
    }
    for (const auto& f : heuristic) merge_flag(result.flags, f);

    if (score_gate || !heuristic.empty()) {
        result.llm_invoked = true;
        try {
            auto analysis = llm_analyze(report, {result.classifier_score, model.threshold, result.flags}, gateway, catalog);
            for (auto& f : analysis.flags) merge_flag(result.flags, std::move(f));
            result.recommendations = std::move(analysis.recommendations);
            for (auto& w : analysis.warnings) result.warnings.push_back(std::move(w));
        } catch (const ProviderError& e) {
            result.warnings.push_back(std::string("degraded analysis: ") + e.what());
        }
    }
    result.verdict = result.flags.empty() ? Verdict::Pass : Verdict::Fail;
    return result;
}

}  // namespace brqual::detect
