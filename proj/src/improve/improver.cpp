#include "brqual/improve/improver.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <cctype>

namespace brqual::improve {

void to_json(Json& j, const Ablation& a) { j = Json{{"rag", a.rag}, {"detector", a.detector}, {"few_shot", a.few_shot}}; }

void from_json(const Json& j, Ablation& a) {
    a.rag = j.at("rag").get<bool>();
    a.detector = j.at("detector").get<bool>();
    a.few_shot = j.at("few_shot").get<bool>();
}

void to_json(Json& j, const ImprovementRecord& r) {
    j = Json{{"section", r.section},
             {"issue_class", r.issue_class},
             {"prompt_id", r.prompt_id},
             {"retrieved_chunk_ids", r.retrieved_chunk_ids},
             {"before", r.before},
             {"after", r.after},
             {"ablation_config", r.ablation_config},
             {"request_hash", r.request_hash},
             {"success", r.success},
             {"error", r.error}};
}

void from_json(const Json& j, ImprovementRecord& r) {
    try {
        r.section = j.at("section").get<SectionKind>();
        r.issue_class = j.at("issue_class").get<IssueClass>();
        r.prompt_id = j.at("prompt_id").get<std::string>();
        r.retrieved_chunk_ids = j.at("retrieved_chunk_ids").get<std::vector<std::string>>();
        r.before = j.at("before").get<std::string>();
        r.after = j.at("after").get<std::string>();
        r.ablation_config = j.at("ablation_config").get<Ablation>();
        r.request_hash = j.value("request_hash", "");
        r.success = j.at("success").get<bool>();
        r.error = j.value("error", "");
    } catch (const Json::out_of_range& e) {
        throw SchemaError(std::string("improvement record: ") + e.what());
    }
}

void to_json(Json& j, const ImprovedReport& r) {
    j = Json{{"base", r.base}, {"records", r.records}, {"warnings", r.warnings}};
}

void from_json(const Json& j, ImprovedReport& r) {
    if (!j.contains("base") || !j.contains("records")) throw SchemaError("improved report needs base and records");
    r.base = j.at("base").get<StructuredReport>();
    r.records = j.at("records").get<std::vector<ImprovementRecord>>();
    r.warnings = j.value("warnings", std::vector<std::string>{});
}

const PromptTemplate* select_template(const PromptCatalog& catalog, SectionKind section,
                                      const std::vector<IssueFlag>& flags) {
    std::optional<IssueClass> worst;
    for (const auto& f : flags) {
        if (f.section != section) continue;
        if (!worst || severity_rank(f.issue_class) < severity_rank(*worst)) worst = f.issue_class;
    }
    if (!worst) return nullptr;
    const auto* t = catalog.find(section, *worst);
    if (!t) {
        throw CatalogMissing("no improvement template for " + std::string(to_string(section)) + "/" +
                             std::string(to_string(*worst)));
    }
    return t;
}

std::size_t estimate_tokens(const provider::ChatRequest& request) {
    return (request.system_text.size() + request.user_text.size() + 3) / 4;
}

namespace {

std::string report_context(const StructuredReport& report, SectionKind target, const ReportText& source) {
    std::string out = "Summary: " + text::collapse_whitespace(source.summary) + "\n";
    for (auto kind : kAllSections) {
        if (kind == target) continue;
        out += "<section name=\"";
        out += to_string(kind);
        out += "\">\n";
        const auto& content = report.section(kind).content;
        if (!content.empty()) out += content + "\n";
        out += "</section>\n";
    }
    const auto& current = report.section(target).content;
    out += "<current name=\"";
    out += to_string(target);
    out += "\">\n";
    if (!current.empty()) out += current + "\n";
    out += "</current>";
    return out;
}

std::string detector_findings(const DetectionResult& detection) {
    std::string out(kFindingsHeader);
    out += "\n";
    out += detection.verdict == Verdict::Fail ? "Verdict: Fail\n" : "Verdict: Pass\n";
    for (const auto& f : detection.flags) {
        out += "- ";
        out += short_name(f.section);
        out += " ";
        out += to_string(f.issue_class);
        out += ": ";
        out += f.detail;
        out += "\n";
    }
    for (const auto& r : detection.recommendations) out += "Recommendation: " + r + "\n";
    return out;
}

std::string knowledge_block(std::size_t rank, const rag::KnowledgeChunk& chunk) {
    return "[" + std::to_string(rank) + "] " + chunk.source_title + "\n" + text::trim_copy(chunk.text) + "\n";
}

std::string few_shot_text(const PromptTemplate& tmpl) {
    std::string out = "\n\n";
    out += kFewShotHeader;
    for (const auto& pair : tmpl.few_shot_pairs) {
        out += "\nPoor example:\n" + pair.bad_example + "\nImproved example:\n" + pair.good_example + "\n";
    }
    return out;
}

std::string_view strip_fence(std::string_view completion) {
    auto t = text::trim(completion);
    if (t.substr(0, 3) != "```") return t;
    auto nl = t.find('\n');
    if (nl == std::string_view::npos) return t;
    t = t.substr(nl + 1);
    auto close = t.rfind("```");
    if (close != std::string_view::npos) t = t.substr(0, close);
    return text::trim(t);
}

bool numbered(std::string_view line) {
    auto marker = text::trim(text::list_marker(line));
    return !marker.empty() && std::isdigit(static_cast<unsigned char>(marker.front()));
}

}  // namespace

AssembledPrompt assemble_prompt(const PromptTemplate& tmpl, const StructuredReport& report, const ReportText& source,
                                const DetectionResult& detection, const rag::RetrievalResult* retrieval,
                                const rag::VectorIndex* index, const Ablation& ablation, std::size_t token_budget) {
    if (ablation.rag != (retrieval != nullptr)) {
        throw std::invalid_argument("assemble_prompt: retrieval must be given iff RAG is enabled");
    }
    if (retrieval && !index) throw std::invalid_argument("assemble_prompt: retrieval needs its index");
    const auto section = tmpl.section.value_or(SectionKind::StepsToReproduce);

    std::vector<std::pair<std::string, std::string>> blocks;  // (chunk_id, text)
    if (retrieval) {
        for (const auto& s : retrieval->selected) {
            blocks.emplace_back(s.chunk_id, knowledge_block(blocks.size() + 1, index->chunks().at(s.index)));
        }
    }

    AssembledPrompt out;
    out.request.prompt_id = tmpl.prompt_id;
    out.request.system_text = tmpl.system_text;
    if (ablation.few_shot && !tmpl.few_shot_pairs.empty()) out.request.system_text += few_shot_text(tmpl);
    const auto context = report_context(report, section, source);
    const auto findings = ablation.detector ? detector_findings(detection) : std::string();

    for (std::size_t kept = blocks.size();; --kept) {
        std::string knowledge;
        if (kept > 0) {
            knowledge = std::string(kKnowledgeHeader) + "\n";
            for (std::size_t i = 0; i < kept; ++i) knowledge += blocks[i].second + "\n";
        }
        out.request.user_text = render(tmpl.body, {{"report_context", context},
                                                   {"detector_findings", findings},
                                                   {"retrieved_knowledge", knowledge}});
        if (estimate_tokens(out.request) <= token_budget) {
            out.dropped_blocks = blocks.size() - kept;
            for (std::size_t i = 0; i < kept; ++i) out.chunk_ids.push_back(blocks[i].first);
            return out;
        }
        if (kept == 0) break;
    }
    throw SlotOverflow("prompt " + tmpl.prompt_id + " exceeds the token budget of " + std::to_string(token_budget) +
                       " even without retrieved knowledge");
}

std::vector<std::string> parse_enumerated_steps(std::string_view completion) {
    std::vector<std::string> steps;
    for (auto line : text::split_lines(strip_fence(completion))) {
        auto t = text::trim(line);
        if (numbered(t)) steps.push_back(std::string(t));
    }
    return steps;
}

ImprovementRecord improve_section(SectionKind section, const PromptTemplate& tmpl, const AssembledPrompt& assembled,
                                  provider::Gateway& gateway, std::string before, const Ablation& ablation) {
    ImprovementRecord record;
    record.section = section;
    record.issue_class = tmpl.issue_class.value_or(IssueClass::Enhance);
    record.prompt_id = tmpl.prompt_id;
    record.retrieved_chunk_ids = assembled.chunk_ids;
    record.before = std::move(before);
    record.ablation_config = ablation;

    auto attempt = [&](const provider::ChatRequest& request) -> std::optional<std::string> {
        record.request_hash = provider::request_hash(provider::canonical_chat_request(request, gateway.config().chat_model));
        const auto completion = gateway.chat(request);
        if (section == SectionKind::StepsToReproduce) {
            auto steps = parse_enumerated_steps(completion);
            if (steps.empty()) return std::nullopt;
            return text::join(steps, "\n");
        }
        auto t = text::trim_copy(strip_fence(completion));
        if (t.empty()) return std::nullopt;
        return t;
    };

    auto result = attempt(assembled.request);
    if (!result) {
        auto retry = assembled.request;
        retry.user_text += "\n\n";
        retry.user_text += kFormatReminder;
        result = attempt(retry);
    }
    if (!result) {
        throw UnparseableOutput("completion for " + std::string(to_string(section)) + " (" + tmpl.prompt_id +
                                ") did not match the expected format after a retry");
    }
    record.after = std::move(*result);
    record.success = true;
    return record;
}

ImprovedReport improve_report(const StructuredReport& report, const ReportText& source,
                              const DetectionResult& detection, provider::Gateway& gateway,
                              const PromptCatalog& catalog, const rag::VectorIndex* index, const Ablation& ablation,
                              const ImproveConfig& config) {
    ImprovedReport out;
    out.base = report;

    std::vector<std::pair<SectionKind, const PromptTemplate*>> plan;
    for (auto kind : kRequiredSections) {
        const PromptTemplate* t = nullptr;
        if (ablation.detector) {
            t = select_template(catalog, kind, detection.flags);
        } else {
            t = catalog.find(kind, IssueClass::Enhance);
            if (!t) throw CatalogMissing("no Enhance template for " + std::string(to_string(kind)));
        }
        if (t) plan.emplace_back(kind, t);
    }
    if (plan.empty()) return out;

    std::optional<rag::RetrievalResult> retrieval;
    if (ablation.rag) {
        if (!index || index->empty()) throw std::invalid_argument("improve_report: RAG enabled without an index");
        try {
            retrieval = rag::retrieve(*index, source.summary, source.description, gateway, catalog, config.retrieval);
        } catch (const ProviderError& e) {
            out.warnings.push_back(std::string("retrieval failed: ") + e.what());
            retrieval = rag::RetrievalResult{};
        }
        for (auto& w : retrieval->warnings) out.warnings.push_back(w);
    }

    for (const auto& [kind, tmpl] : plan) {
        const auto before = report.section(kind).content;
        try {
            auto assembled = assemble_prompt(*tmpl, report, source, detection, retrieval ? &*retrieval : nullptr, index,
                                             ablation, config.token_budget);
            if (assembled.dropped_blocks > 0) {
                out.warnings.push_back(std::to_string(assembled.dropped_blocks) + " knowledge blocks dropped for " +
                                       tmpl->prompt_id + " to fit the token budget");
            }
            auto record = improve_section(kind, *tmpl, assembled, gateway, before, ablation);
            out.base.set_section(kind, record.after, Provenance::Generated);
            out.records.push_back(std::move(record));
        } catch (const AuthError&) {
            throw;
        } catch (const TransportError&) {
            throw;
        } catch (const Error& e) {
            ImprovementRecord failed;
            failed.section = kind;
            failed.issue_class = tmpl->issue_class.value_or(IssueClass::Enhance);
            failed.prompt_id = tmpl->prompt_id;
            failed.before = before;
            failed.ablation_config = ablation;
            failed.error = e.what();
            out.records.push_back(std::move(failed));
        }
    }
    return out;
}

}  // namespace brqual::improve
