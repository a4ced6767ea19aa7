#pragma once

#include "brqual/core/json.hpp"
#include "brqual/core/model.hpp"
#include "brqual/provider/gateway.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace brqual::app {

struct TrackerSettings {
    std::string base_url = "https://bugs.mojang.com";
    std::string project_key = "MC";
    std::string created_after;          // ISO-8601, empty for no bound
    std::size_t max_results = 1000;
    std::size_t page_size = 100;
    std::size_t parallelism = 4;
    std::filesystem::path fixtures_dir;  // offline source when set
};

struct ProviderSettings {
    provider::Mode mode = provider::Mode::Replay;
    std::filesystem::path cache_path = "cache/replay_cache.jsonl";
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string chat_model = "gpt-4o-mini";
    std::string embed_model = "text-embedding-ada-002";
    std::string rerank_model = "cross-encoder/ms-marco-MiniLM-L-6-v2";
    provider::RerankMode rerank_mode = provider::RerankMode::Lexical;
    std::size_t embed_dimension = 1536;
    int max_attempts = 3;
    std::size_t max_in_flight = 4;
};

struct PreprocessSettings {
    std::filesystem::path rules_path;  // empty: shipped rules
    bool use_llm = true;
};

struct DetectSettings {
    std::filesystem::path model_path = "models/classifier.json";
    std::filesystem::path labeled_path;
    std::optional<double> threshold;  // overrides the model's threshold
};

struct RagSettings {
    std::filesystem::path knowledge_path;
    std::filesystem::path index_dir = "models/kb";
    std::size_t pool_size = 40;
    std::size_t keep = 15;
    std::size_t chunk_size = 1000;
    std::size_t overlap = 200;
};

struct ImproveSettings {
    std::filesystem::path catalog_path;  // empty: shipped prompts
    std::size_t token_budget = 16000;
};

struct EvalSettings {
    std::filesystem::path embeddings_path;
    std::filesystem::path triples_path;
    std::filesystem::path annotations_path;
    double alpha = 0.05;
};

struct SampleSettings {
    std::size_t total = 996;
    std::uint64_t seed = 42;
    bool target_only = false;  // keep only the three target resolutions
};

struct PipelineConfig {
    TrackerSettings tracker;
    ProviderSettings provider;
    PreprocessSettings preprocess;
    DetectSettings detect;
    RagSettings rag;
    ImproveSettings improve;
    EvalSettings eval;
    SampleSettings sample;
    std::filesystem::path work_dir = "out";
    std::size_t workers = 0;  // 0: hardware concurrency

    provider::GatewayConfig gateway_config() const;
    std::size_t worker_count() const;
};

/// Defaults as a JSON document with the same shape as a config file.
Json default_config_json();

/// Every leaf of `patch` must exist in `base` with a compatible type.
void merge_config(Json& base, const Json& patch, const std::string& origin);

/// Leaves overridden by BRQUAL_<SECTION>_<KEY> (BRQUAL_<KEY> for top-level
/// keys); BRQUAL_API_KEY maps to provider.api_key. Values are parsed as
/// JSON when possible, otherwise taken as strings.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
Json env_overrides(const Json& shape, const EnvLookup& env);

EnvLookup process_env();

PipelineConfig config_from_json(const Json& j);
Json config_to_json(const PipelineConfig& c);

/// Relative paths are taken relative to `base`.
void resolve_paths(PipelineConfig& c, const std::filesystem::path& base);

/// Load order: defaults, file (or $BRQUAL_CONFIG), command-line patch, then
/// environment. Relative paths in the file resolve against its directory,
/// the rest against the current directory. Throws ConfigError.
PipelineConfig load_config(const std::optional<std::filesystem::path>& file, const Json& flag_patch,
                           const EnvLookup& env);

/// Startup validation: consistent mode settings and sane sizes.
void validate_config(const PipelineConfig& c);

/// Pipeline clock: SOURCE_DATE_EPOCH when set, wall clock otherwise.
Timestamp pipeline_now(const EnvLookup& env);

}  // namespace brqual::app
