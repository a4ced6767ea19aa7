#include "brqual/app/pipeline.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/parallel.hpp"
#include "brqual/detect/detector.hpp"

#include <chrono>

namespace brqual::app {

namespace {

template <typename T, typename F>
auto timed_map(const std::vector<T>& items, std::size_t workers, Timed* timing, F fn) {
    const auto start = std::chrono::steady_clock::now();
    auto out = parallel_map(items, workers, fn);
    if (timing) {
        timing->total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        timing->items += items.size();
    }
    return out;
}

const RawBugReport& raw_for(const std::map<std::string, const RawBugReport*>& raws, const std::string& key) {
    auto it = raws.find(key);
    if (it == raws.end()) throw ArtifactError("no raw report for " + key + " in the fetched corpus");
    return *it->second;
}

}  // namespace

void require_artifact(const std::filesystem::path& path, std::string_view producer) {
    if (!std::filesystem::exists(path)) {
        throw ArtifactError("missing " + path.string() + " (run `brqual " + std::string(producer) + "` first)");
    }
}

const std::vector<NamedAblation>& ablation_variants() {
    static const std::vector<NamedAblation> kVariants{
        {"full", {true, true, true}},
        {"no-rag", {false, true, true}},
        {"no-detector", {true, false, true}},
        {"no-fewshot", {true, true, false}},
    };
    return kVariants;
}

std::map<std::string, const RawBugReport*> index_by_key(const std::vector<RawBugReport>& raws) {
    std::map<std::string, const RawBugReport*> out;
    for (const auto& r : raws) {
        if (!out.emplace(r.key, &r).second) throw SchemaError("duplicate report key " + r.key);
    }
    return out;
}

std::vector<preprocess::PreprocessResult> preprocess_corpus(const std::vector<RawBugReport>& raws,
                                                            provider::Gateway* gateway,
                                                            const improve::PromptCatalog* catalog,
                                                            const preprocess::RuleSet& rules, std::size_t workers,
                                                            Timed* timing) {
    return timed_map(raws, workers, timing, [&](const RawBugReport& raw) {
        return preprocess::preprocess_report(raw, gateway, catalog, rules);
    });
}

std::vector<DetectionResult> detect_corpus(const std::vector<StructuredReport>& reports,
                                           const std::vector<RawBugReport>& raws,
                                           const detect::ClassifierModel& model, provider::Gateway& gateway,
                                           const improve::PromptCatalog& catalog, std::size_t workers,
                                           Timed* timing) {
    const auto by_key = index_by_key(raws);
    for (const auto& r : reports) raw_for(by_key, r.key);
    return timed_map(reports, workers, timing, [&](const StructuredReport& report) {
        const auto& raw = raw_for(by_key, report.key);
        return detect::detect_report(report, detect::classifier_text(raw.summary, raw.description), model, gateway,
                                     catalog);
    });
}

std::vector<improve::ImprovedReport> improve_corpus(const std::vector<StructuredReport>& reports,
                                                    const std::vector<RawBugReport>& raws,
                                                    const std::vector<DetectionResult>& detections,
                                                    provider::Gateway& gateway, const improve::PromptCatalog& catalog,
                                                    const rag::VectorIndex* index, const improve::Ablation& ablation,
                                                    const improve::ImproveConfig& config, std::size_t workers,
                                                    Timed* timing) {
    const auto by_key = index_by_key(raws);
    std::map<std::string, const DetectionResult*> detection_by_key;
    for (const auto& d : detections) detection_by_key.emplace(d.key, &d);
    for (const auto& r : reports) {
        raw_for(by_key, r.key);
        if (!detection_by_key.count(r.key)) throw ArtifactError("no detection result for " + r.key);
    }
    return timed_map(reports, workers, timing, [&](const StructuredReport& report) {
        const auto& raw = raw_for(by_key, report.key);
        return improve::improve_report(report, {raw.summary, raw.description}, *detection_by_key.at(report.key),
                                       gateway, catalog, index, ablation, config);
    });
}

CompletenessComparison compare_completeness(const std::vector<StructuredReport>& raw,
                                            const std::vector<improve::ImprovedReport>& improved) {
    CompletenessComparison c;
    for (const auto& r : raw) c.raw.push_back(evaluate::check_completeness(r));
    for (const auto& r : improved) c.improved.push_back(evaluate::check_completeness(r.base));
    c.raw_rates = evaluate::completeness_rates(c.raw);
    c.improved_rates = evaluate::completeness_rates(c.improved);
    return c;
}

}  // namespace brqual::app
