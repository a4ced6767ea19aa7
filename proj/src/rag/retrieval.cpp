#include "brqual/rag/retrieval.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace brqual::rag {

void to_json(Json& j, const RetrievalResult& r) {
    Json candidates = Json::array();
    for (const auto& c : r.candidates) candidates.push_back({{"chunk_id", c.chunk_id}, {"similarity", c.similarity}});
    Json selected = Json::array();
    for (const auto& s : r.selected) selected.push_back({{"chunk_id", s.chunk_id}, {"rerank_score", s.rerank_score}});
    j = Json{{"queries", r.queries}, {"candidates", candidates}, {"selected", selected}, {"warnings", r.warnings}};
}

std::vector<std::string> parse_queries(std::string_view completion) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto raw : text::split_lines(completion)) {
        auto line = text::strip_list_marker(text::trim(raw));
        if (line.size() >= 2 && (line.front() == '"' || line.front() == '\'') && line.back() == line.front()) {
            line = text::trim_copy(std::string_view(line).substr(1, line.size() - 2));
        }
        if (line.empty() || line.rfind("```", 0) == 0) continue;
        // Preamble such as "Here are the queries:".
        if (line.back() == ':') continue;
        if (!seen.insert(line).second) continue;
        out.push_back(std::move(line));
        if (out.size() == kMaxQueries) break;
    }
    return out;
}

std::vector<std::string> fallback_queries(std::string_view summary, std::string_view description) {
    auto s = text::collapse_whitespace(summary);
    if (!s.empty()) return {s};
    auto d = text::collapse_whitespace(description);
    if (d.empty()) return {};
    return {text::trim_copy(std::string_view(d).substr(0, kFallbackQueryChars))};
}

std::vector<std::string> generate_queries(std::string_view summary, std::string_view description,
                                          provider::Gateway& gateway, const improve::PromptCatalog& catalog,
                                          std::vector<std::string>* warnings) {
    if (text::trim(summary).empty() && text::trim(description).empty()) return {};
    const auto& tmpl = catalog.get(std::string(kQueryPromptId));
    provider::ChatRequest request;
    request.prompt_id = tmpl.prompt_id;
    request.system_text = tmpl.system_text;
    request.user_text =
        improve::render(tmpl.body, {{"summary", std::string(summary)}, {"description", std::string(description)}});
    try {
        auto queries = parse_queries(gateway.chat(request));
        if (!queries.empty()) return queries;
        if (warnings) warnings->emplace_back("query generation returned no usable queries; using fallback");
    } catch (const ProviderError& e) {
        if (warnings) warnings->push_back(std::string("query generation failed; using fallback: ") + e.what());
    }
    return fallback_queries(summary, description);
}

std::vector<Candidate> rank_candidates(const VectorIndex& index, const std::vector<std::vector<double>>& query_vectors,
                                       std::size_t pool_size) {
    if (index.empty()) throw std::invalid_argument("retrieve_candidates: index is empty");
    std::vector<Candidate> all;
    if (query_vectors.empty()) return all;
    std::vector<double> norms;
    for (const auto& q : query_vectors) {
        double s = 0.0;
        for (double x : q) s += x * x;
        norms.push_back(std::sqrt(s));
    }
    all.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < query_vectors.size(); ++q) {
            best = std::max(best, index.similarity(query_vectors[q], norms[q], i));
        }
        all.push_back({index.chunks()[i].chunk_id, best, i});
    }
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.chunk_id < b.chunk_id;
    });
    if (all.size() > pool_size) all.resize(pool_size);
    return all;
}

std::vector<Candidate> retrieve_candidates(const VectorIndex& index, const std::vector<std::string>& queries,
                                           provider::Gateway& gateway, std::size_t pool_size) {
    if (index.empty()) throw std::invalid_argument("retrieve_candidates: index is empty");
    if (queries.empty()) return {};
    std::vector<std::vector<double>> vectors;
    for (auto& v : gateway.embed(queries)) vectors.push_back(std::move(v.values));
    return rank_candidates(index, vectors, pool_size);
}

std::vector<Selected> rerank_and_select(const VectorIndex& index, const std::vector<Candidate>& candidates,
                                        std::string_view report_text, provider::Gateway& gateway, std::size_t keep,
                                        std::vector<std::string>* warnings) {
    if (candidates.empty()) return {};
    provider::RerankRequest request;
    request.query_text = std::string(report_text);
    for (const auto& c : candidates) request.candidate_texts.push_back(index.chunks().at(c.index).text);
    std::vector<double> scores;
    try {
        scores = gateway.rerank(request);
    } catch (const ProviderError& e) {
        if (warnings) warnings->push_back(std::string("re-ranker failed; using lexical scores: ") + e.what());
        scores = provider::lexical_rerank(request);
    }
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (candidates[a].similarity != candidates[b].similarity) {
            return candidates[a].similarity > candidates[b].similarity;
        }
        return candidates[a].chunk_id < candidates[b].chunk_id;
    });
    std::vector<Selected> out;
    for (std::size_t k = 0; k < order.size() && k < keep; ++k) {
        const auto& c = candidates[order[k]];
        out.push_back({c.chunk_id, scores[order[k]], c.index});
    }
    return out;
}

RetrievalResult retrieve(const VectorIndex& index, std::string_view summary, std::string_view description,
                         provider::Gateway& gateway, const improve::PromptCatalog& catalog,
                         const RetrievalConfig& config) {
    RetrievalResult result;
    result.queries = generate_queries(summary, description, gateway, catalog, &result.warnings);
    if (result.queries.empty()) {
        result.warnings.emplace_back("no query text available; retrieval skipped");
        return result;
    }
    result.candidates = retrieve_candidates(index, result.queries, gateway, config.pool_size);
    std::string report_text(summary);
    if (!description.empty()) {
        report_text += "\n";
        report_text += description;
    }
    result.selected = rerank_and_select(index, result.candidates, report_text, gateway, config.keep, &result.warnings);
    return result;
}

}  // namespace brqual::rag
