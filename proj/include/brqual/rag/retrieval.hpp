#pragma once

#include "brqual/improve/catalog.hpp"
#include "brqual/provider/gateway.hpp"
#include "brqual/rag/index.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace brqual::rag {

inline constexpr std::string_view kQueryPromptId = "rag.querygen.v1";
inline constexpr std::size_t kMaxQueries = 5;
inline constexpr std::size_t kFallbackQueryChars = 120;

struct Candidate {
    std::string chunk_id;
    double similarity = 0.0;
    std::size_t index = 0;  // position in the VectorIndex

    bool operator==(const Candidate&) const = default;
};

struct Selected {
    std::string chunk_id;
    double rerank_score = 0.0;
    std::size_t index = 0;

    bool operator==(const Selected&) const = default;
};

struct RetrievalResult {
    std::vector<std::string> queries;
    std::vector<Candidate> candidates;
    std::vector<Selected> selected;
    std::vector<std::string> warnings;

    bool operator==(const RetrievalResult&) const = default;
};

void to_json(Json& j, const RetrievalResult& r);

struct RetrievalConfig {
    std::size_t pool_size = 40;
    std::size_t keep = 15;
};

/// Query lines from a completion: list markers and surrounding quotes are
/// stripped, blank and duplicate lines dropped, at most kMaxQueries kept.
std::vector<std::string> parse_queries(std::string_view completion);

/// Summary, or the first kFallbackQueryChars of the description when the
/// summary is blank; empty when both are.
std::vector<std::string> fallback_queries(std::string_view summary, std::string_view description);

/// LLM multi-query generation; empty without any report text. Falls back
/// (with a warning) on provider failure or an unusable completion.
std::vector<std::string> generate_queries(std::string_view summary, std::string_view description,
                                          provider::Gateway& gateway, const improve::PromptCatalog& catalog,
                                          std::vector<std::string>* warnings = nullptr);

/// Per-chunk maximum cosine over all queries; top pool_size by similarity,
/// ties by chunk_id ascending.
std::vector<Candidate> retrieve_candidates(const VectorIndex& index, const std::vector<std::string>& queries,
                                           provider::Gateway& gateway, std::size_t pool_size = 40);

/// Same ranking from already-embedded queries.
std::vector<Candidate> rank_candidates(const VectorIndex& index, const std::vector<std::vector<double>>& query_vectors,
                                       std::size_t pool_size = 40);

/// Re-scores candidates against the report text and keeps the best `keep`,
/// ordered by score, then prior similarity, then chunk_id. Provider failures
/// fall back to the lexical scorer (recorded in warnings).
std::vector<Selected> rerank_and_select(const VectorIndex& index, const std::vector<Candidate>& candidates,
                                        std::string_view report_text, provider::Gateway& gateway,
                                        std::size_t keep = 15, std::vector<std::string>* warnings = nullptr);

/// The full funnel: queries -> candidates -> selected.
RetrievalResult retrieve(const VectorIndex& index, std::string_view summary, std::string_view description,
                         provider::Gateway& gateway, const improve::PromptCatalog& catalog,
                         const RetrievalConfig& config = {});

}  // namespace brqual::rag
