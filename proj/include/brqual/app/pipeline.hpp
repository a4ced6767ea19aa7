#pragma once

#include "brqual/core/model.hpp"
#include "brqual/detect/classifier.hpp"
#include "brqual/evaluate/completeness.hpp"
#include "brqual/improve/catalog.hpp"
#include "brqual/improve/improver.hpp"
#include "brqual/preprocess/extract.hpp"
#include "brqual/preprocess/rules.hpp"
#include "brqual/provider/gateway.hpp"
#include "brqual/rag/index.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace brqual::app {

/// Artifact layout under the work directory.
struct Workspace {
    std::filesystem::path root;

    std::filesystem::path raw_corpus() const { return root / "raw" / "corpus.jsonl"; }
    std::filesystem::path sample_corpus() const { return root / "sample" / "corpus.jsonl"; }
    std::filesystem::path sample_manifest() const { return root / "sample" / "manifest.jsonl"; }
    std::filesystem::path preprocessed() const { return root / "preprocessed" / "reports.jsonl"; }
    std::filesystem::path preprocess_warnings() const { return root / "preprocessed" / "warnings.jsonl"; }
    std::filesystem::path detections() const { return root / "detection" / "results.jsonl"; }
    std::filesystem::path improved() const { return root / "improved" / "reports.jsonl"; }
    std::filesystem::path ablation_dir() const { return root / "ablation"; }
    std::filesystem::path evaluation_dir() const { return root / "evaluation"; }
};

/// Throws ArtifactError naming the command that produces the file.
void require_artifact(const std::filesystem::path& path, std::string_view producer);

struct NamedAblation {
    std::string name;
    improve::Ablation ablation;
};

/// full, no-rag, no-detector, no-fewshot.
const std::vector<NamedAblation>& ablation_variants();

struct Timed {
    double total_ms = 0.0;
    std::size_t items = 0;
    double per_item_ms() const { return items ? total_ms / static_cast<double>(items) : 0.0; }
};

std::vector<preprocess::PreprocessResult> preprocess_corpus(const std::vector<RawBugReport>& raws,
                                                            provider::Gateway* gateway,
                                                            const improve::PromptCatalog* catalog,
                                                            const preprocess::RuleSet& rules, std::size_t workers,
                                                            Timed* timing = nullptr);

/// Raw reports indexed by key; throws SchemaError on duplicate keys.
std::map<std::string, const RawBugReport*> index_by_key(const std::vector<RawBugReport>& raws);

std::vector<DetectionResult> detect_corpus(const std::vector<StructuredReport>& reports,
                                           const std::vector<RawBugReport>& raws,
                                           const detect::ClassifierModel& model, provider::Gateway& gateway,
                                           const improve::PromptCatalog& catalog, std::size_t workers,
                                           Timed* timing = nullptr);

/// Reports and detections are matched by key. A report whose improvement
/// fails as a whole (provider outage) aborts the run.
std::vector<improve::ImprovedReport> improve_corpus(const std::vector<StructuredReport>& reports,
                                                    const std::vector<RawBugReport>& raws,
                                                    const std::vector<DetectionResult>& detections,
                                                    provider::Gateway& gateway, const improve::PromptCatalog& catalog,
                                                    const rag::VectorIndex* index, const improve::Ablation& ablation,
                                                    const improve::ImproveConfig& config, std::size_t workers,
                                                    Timed* timing = nullptr);

struct CompletenessComparison {
    std::vector<evaluate::CompletenessResult> raw;
    std::vector<evaluate::CompletenessResult> improved;
    evaluate::CompletenessRates raw_rates;
    evaluate::CompletenessRates improved_rates;
};

CompletenessComparison compare_completeness(const std::vector<StructuredReport>& raw,
                                            const std::vector<improve::ImprovedReport>& improved);

}  // namespace brqual::app
