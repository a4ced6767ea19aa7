#pragma once

// Single entry point for every external model service: chat completion,
// text embedding and relevance re-ranking. All calls go through a
// content-addressed record/replay cache so pipelines can run offline and
// reproduce byte-identical outputs.

#include "brqual/core/json.hpp"
#include "brqual/core/model.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace brqual::provider {

struct ChatRequest {
    std::string prompt_id;
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

struct RerankRequest {
    std::string query_text;
    std::vector<std::string> candidate_texts;
};

struct CacheEntry {
    std::string request_hash;
    std::string response_body;
    Timestamp recorded_at{};
    // Canonical request; kept so prompts can be audited from the cache.
    Json request;
};

void to_json(Json& j, const CacheEntry& e);
void from_json(const Json& j, CacheEntry& e);

enum class Mode { Live, Record, Replay };
enum class RerankMode { Remote, Lexical };

std::optional<Mode> parse_mode(std::string_view text);
std::optional<RerankMode> parse_rerank_mode(std::string_view text);

struct GatewayConfig {
    Mode mode = Mode::Replay;
    std::filesystem::path cache_path;
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;  // from BRQUAL_API_KEY
    std::string chat_model = "gpt-4o-mini";
    std::string embed_model = "text-embedding-ada-002";
    std::string rerank_model = "cross-encoder/ms-marco-MiniLM-L-6-v2";
    RerankMode rerank_mode = RerankMode::Lexical;
    std::size_t embed_dimension = 1536;
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{500};
    std::size_t max_in_flight = 4;
    std::size_t embed_batch = 64;
};

/// Whatever actually answers requests in live and record mode.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string chat(const ChatRequest& request, const std::string& model) = 0;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                                   const std::string& model) = 0;
    virtual std::vector<double> rerank(const RerankRequest& request, const std::string& model) = 0;
};

/// OpenAI-compatible wire client (chat/completions, embeddings) plus a
/// "/rerank" endpoint taking {model, query, documents}.
class HttpBackend : public Backend {
public:
    HttpBackend(std::string base_url, std::string api_key);
    std::string chat(const ChatRequest& request, const std::string& model) override;
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const std::string& model) override;
    std::vector<double> rerank(const RerankRequest& request, const std::string& model) override;

private:
    Json post(const std::string& path, const Json& body);
    std::string base_url_;
    std::string api_key_;
};

/// Append-only JSONL store of CacheEntry records keyed by request hash.
class ReplayCache {
public:
    ReplayCache() = default;
    explicit ReplayCache(std::filesystem::path path);

    std::optional<CacheEntry> find(const std::string& hash) const;
    /// Persists the entry unless the hash is already present; existing
    /// entries are never rewritten. Returns true when appended.
    bool append(CacheEntry entry);
    std::size_t size() const;
    std::vector<CacheEntry> entries() const;  // file order

private:
    std::filesystem::path path_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<CacheEntry> entries_;
};

/// Canonical form: string values whitespace-collapsed, object keys sorted.
Json canonicalize(const Json& request);
std::string request_hash(const Json& request);

Json canonical_chat_request(const ChatRequest& request, const std::string& model);
Json canonical_embed_request(const std::string& text, const std::string& model);
Json canonical_rerank_request(const RerankRequest& request, const std::string& model);

/// Offline relevance scorer: cosine between the sets of lowercased
/// alphanumeric tokens of query and candidate, |Q ∩ C| / sqrt(|Q| |C|).
std::vector<double> lexical_rerank(const RerankRequest& request);

struct CallRecord {
    std::string kind;  // chat | embed | rerank | rerank-lexical
    std::string prompt_id;
    std::string request_hash;
    bool cache_hit = false;
};

class Gateway {
public:
    using Clock = std::function<Timestamp()>;
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit Gateway(GatewayConfig config, std::unique_ptr<Backend> backend = nullptr, Clock clock = {},
                     Sleeper sleeper = {});

    std::string chat(const ChatRequest& request);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);
    std::vector<double> rerank(const RerankRequest& request);

    const GatewayConfig& config() const { return config_; }
    const ReplayCache& cache() const { return cache_; }

    std::vector<CallRecord> call_log() const;
    void clear_call_log();
    std::size_t count_calls(std::string_view kind, std::string_view prompt_prefix = {}) const;

private:
    template <typename F>
    auto with_retries(F&& fn) -> decltype(fn());

    std::optional<std::string> lookup(const std::string& hash);
    void store(const std::string& hash, const Json& canonical, std::string body);
    void log(CallRecord record);
    Backend& backend();

    GatewayConfig config_;
    std::unique_ptr<Backend> backend_;
    Clock clock_;
    Sleeper sleeper_;
    ReplayCache cache_;
    std::counting_semaphore<1024> in_flight_;
    mutable std::mutex log_mutex_;
    std::vector<CallRecord> log_;
};

}  // namespace brqual::provider
