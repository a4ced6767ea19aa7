#include "brqual/provider/gateway.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/http.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

namespace brqual::provider {

void to_json(Json& j, const CacheEntry& e) {
    j = Json{{"request_hash", e.request_hash},
             {"response_body", e.response_body},
             {"recorded_at", format_timestamp(e.recorded_at)}};
    if (!e.request.is_null()) j["request"] = e.request;
}

void from_json(const Json& j, CacheEntry& e) {
    e.request_hash = j.at("request_hash").get<std::string>();
    e.response_body = j.at("response_body").get<std::string>();
    e.recorded_at = parse_timestamp(j.at("recorded_at").get<std::string>());
    e.request = j.value("request", Json());
}

std::optional<Mode> parse_mode(std::string_view text) {
    if (text == "live") return Mode::Live;
    if (text == "record") return Mode::Record;
    if (text == "replay") return Mode::Replay;
    return std::nullopt;
}

std::optional<RerankMode> parse_rerank_mode(std::string_view text) {
    if (text == "remote") return RerankMode::Remote;
    if (text == "lexical") return RerankMode::Lexical;
    return std::nullopt;
}

// --- canonical requests ------------------------------------------------------

Json canonicalize(const Json& request) {
    switch (request.type()) {
        case Json::value_t::object: {
            Json out = Json::object();
            for (const auto& [k, v] : request.items()) out[k] = canonicalize(v);
            return out;
        }
        case Json::value_t::array: {
            Json out = Json::array();
            for (const auto& v : request) out.push_back(canonicalize(v));
            return out;
        }
        case Json::value_t::string:
            return text::collapse_whitespace(request.get<std::string>());
        default:
            return request;
    }
}

std::string request_hash(const Json& request) { return text::sha256_hex(canonicalize(request).dump()); }

Json canonical_chat_request(const ChatRequest& request, const std::string& model) {
    return canonicalize(Json{{"kind", "chat"},
                             {"model", model},
                             {"prompt_id", request.prompt_id},
                             {"system_text", request.system_text},
                             {"user_text", request.user_text},
                             {"temperature", request.temperature},
                             {"max_output_tokens", request.max_output_tokens}});
}

Json canonical_embed_request(const std::string& text, const std::string& model) {
    return canonicalize(Json{{"kind", "embed"}, {"model", model}, {"text", text}});
}

Json canonical_rerank_request(const RerankRequest& request, const std::string& model) {
    return canonicalize(Json{{"kind", "rerank"},
                             {"model", model},
                             {"query_text", request.query_text},
                             {"candidate_texts", request.candidate_texts}});
}

std::vector<double> lexical_rerank(const RerankRequest& request) {
    auto as_set = [](const std::string& s) {
        auto tokens = text::tokenize(s);
        return std::set<std::string>(tokens.begin(), tokens.end());
    };
    const auto query = as_set(request.query_text);
    std::vector<double> scores;
    scores.reserve(request.candidate_texts.size());
    for (const auto& candidate : request.candidate_texts) {
        const auto cand = as_set(candidate);
        if (query.empty() || cand.empty()) {
            scores.push_back(0.0);
            continue;
        }
        std::size_t shared = 0;
        for (const auto& t : cand) shared += query.count(t);
        scores.push_back(static_cast<double>(shared) /
                         std::sqrt(static_cast<double>(query.size()) * static_cast<double>(cand.size())));
    }
    return scores;
}

// --- HTTP backend ------------------------------------------------------------

HttpBackend::HttpBackend(std::string base_url, std::string api_key)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

Json HttpBackend::post(const std::string& path, const Json& body) {
    net::HttpClient client(base_url_);
    net::Headers headers;
    if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
    auto response = client.post(path, body.dump(), "application/json", headers);
    if (response.status == 401 || response.status == 403) {
        throw AuthError("provider rejected credentials (HTTP " + std::to_string(response.status) + ")");
    }
    if (response.status == 429) throw RateLimited("provider rate limit (HTTP 429)");
    if (response.status >= 500) {
        throw TransportError("provider error HTTP " + std::to_string(response.status) + " on " + path);
    }
    if (response.status < 200 || response.status >= 300) {
        throw TransportError("provider returned HTTP " + std::to_string(response.status) + " on " + path + ": " +
                                 response.body.substr(0, 200),
                             false);
    }
    try {
        return Json::parse(response.body);
    } catch (const Json::parse_error& e) {
        throw TransportError(std::string("unparseable provider response: ") + e.what(), false);
    }
}

std::string HttpBackend::chat(const ChatRequest& request, const std::string& model) {
    Json messages = Json::array();
    if (!request.system_text.empty()) messages.push_back({{"role", "system"}, {"content", request.system_text}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    Json body{{"model", model},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output_tokens}};
    auto response = post("/chat/completions", body);
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
        throw TransportError(std::string("chat response missing choices[0].message.content: ") + e.what(), false);
    }
}

std::vector<std::vector<double>> HttpBackend::embed(const std::vector<std::string>& texts, const std::string& model) {
    auto response = post("/embeddings", Json{{"model", model}, {"input", texts}});
    std::vector<std::vector<double>> out(texts.size());
    try {
        for (const auto& item : response.at("data")) {
            auto index = item.value("index", std::size_t{0});
            if (index >= out.size()) throw TransportError("embedding index out of range", false);
            out[index] = item.at("embedding").get<std::vector<double>>();
        }
    } catch (const Json::exception& e) {
        throw TransportError(std::string("malformed embeddings response: ") + e.what(), false);
    }
    return out;
}

std::vector<double> HttpBackend::rerank(const RerankRequest& request, const std::string& model) {
    auto response =
        post("/rerank", Json{{"model", model}, {"query", request.query_text}, {"documents", request.candidate_texts}});
    std::vector<double> scores(request.candidate_texts.size(), 0.0);
    try {
        for (const auto& item : response.at("results")) {
            auto index = item.at("index").get<std::size_t>();
            if (index >= scores.size()) throw TransportError("rerank index out of range", false);
            scores[index] = item.at("relevance_score").get<double>();
        }
    } catch (const Json::exception& e) {
        throw TransportError(std::string("malformed rerank response: ") + e.what(), false);
    }
    return scores;
}

// --- replay cache ------------------------------------------------------------

ReplayCache::ReplayCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    for (auto& entry : jsonl::read<CacheEntry>(path_)) {
        if (index_.count(entry.request_hash)) continue;
        index_.emplace(entry.request_hash, entries_.size());
        entries_.push_back(std::move(entry));
    }
}

std::optional<CacheEntry> ReplayCache::find(const std::string& hash) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(hash);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second];
}

bool ReplayCache::append(CacheEntry entry) {
    std::unique_lock lock(mutex_);
    if (index_.count(entry.request_hash)) return false;
    if (!path_.empty()) {
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) throw ArtifactError("cannot append to cache " + path_.string());
        out << Json(entry).dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
    }
    index_.emplace(entry.request_hash, entries_.size());
    entries_.push_back(std::move(entry));
    return true;
}

std::size_t ReplayCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::vector<CacheEntry> ReplayCache::entries() const {
    std::shared_lock lock(mutex_);
    return entries_;
}

// --- gateway -----------------------------------------------------------------

Gateway::Gateway(GatewayConfig config, std::unique_ptr<Backend> backend, Clock clock, Sleeper sleeper)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      clock_(std::move(clock)),
      sleeper_(std::move(sleeper)),
      cache_(config_.mode == Mode::Live ? std::filesystem::path{} : config_.cache_path),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_in_flight, 1, 1024))) {
    if (!clock_) {
        clock_ = [] { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); };
    }
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Backend& Gateway::backend() {
    if (!backend_) backend_ = std::make_unique<HttpBackend>(config_.base_url, config_.api_key);
    return *backend_;
}

template <typename F>
auto Gateway::with_retries(F&& fn) -> decltype(fn()) {
    const int attempts = std::max(1, config_.max_attempts);
    for (int attempt = 0;; ++attempt) {
        const bool last = attempt + 1 >= attempts;
        try {
            in_flight_.acquire();
            struct Release {
                std::counting_semaphore<1024>& s;
                ~Release() { s.release(); }
            } release{in_flight_};
            return fn();
        } catch (const RateLimited& e) {
            if (last) {
                throw RateLimited("retry budget exhausted after " + std::to_string(attempts) +
                                  " attempts: " + e.what());
            }
        } catch (const TransportError& e) {
            if (last || !e.retryable()) throw;
        }
        sleeper_(config_.backoff_base * (1 << attempt));
    }
}

std::optional<std::string> Gateway::lookup(const std::string& hash) {
    if (config_.mode == Mode::Live) return std::nullopt;
    auto entry = cache_.find(hash);
    if (!entry) return std::nullopt;
    return entry->response_body;
}

void Gateway::store(const std::string& hash, const Json& canonical, std::string body) {
    if (config_.mode != Mode::Record) return;
    cache_.append(CacheEntry{hash, std::move(body), clock_(), canonical});
}

void Gateway::log(CallRecord record) {
    std::lock_guard lock(log_mutex_);
    log_.push_back(std::move(record));
}

std::vector<CallRecord> Gateway::call_log() const {
    std::lock_guard lock(log_mutex_);
    return log_;
}

void Gateway::clear_call_log() {
    std::lock_guard lock(log_mutex_);
    log_.clear();
}

std::size_t Gateway::count_calls(std::string_view kind, std::string_view prompt_prefix) const {
    std::lock_guard lock(log_mutex_);
    return static_cast<std::size_t>(std::count_if(log_.begin(), log_.end(), [&](const CallRecord& r) {
        return r.kind == kind && r.prompt_id.compare(0, prompt_prefix.size(), prompt_prefix) == 0;
    }));
}

std::string Gateway::chat(const ChatRequest& request) {
    const auto canonical = canonical_chat_request(request, config_.chat_model);
    const auto hash = text::sha256_hex(canonical.dump());
    if (auto hit = lookup(hash)) {
        log({"chat", request.prompt_id, hash, true});
        return *hit;
    }
    log({"chat", request.prompt_id, hash, false});
    if (config_.mode == Mode::Replay) {
        throw CacheMiss("no recorded completion for prompt " + request.prompt_id + " (request " +
                        hash.substr(0, 12) + ")");
    }
    auto body = with_retries([&] { return backend().chat(request, config_.chat_model); });
    store(hash, canonical, body);
    return body;
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw std::invalid_argument("embed: empty input list");
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> misses;
    std::vector<Json> canonicals(texts.size());
    std::vector<std::string> hashes(texts.size());

    for (std::size_t i = 0; i < texts.size(); ++i) {
        canonicals[i] = canonical_embed_request(texts[i], config_.embed_model);
        hashes[i] = text::sha256_hex(canonicals[i].dump());
        if (auto hit = lookup(hashes[i])) {
            out[i].values = Json::parse(*hit).get<std::vector<double>>();
            log({"embed", "", hashes[i], true});
        } else {
            log({"embed", "", hashes[i], false});
            if (config_.mode == Mode::Replay) {
                throw CacheMiss("no recorded embedding (request " + hashes[i].substr(0, 12) + ")");
            }
            misses.push_back(i);
        }
    }

    for (std::size_t start = 0; start < misses.size(); start += std::max<std::size_t>(1, config_.embed_batch)) {
        const auto end = std::min(misses.size(), start + std::max<std::size_t>(1, config_.embed_batch));
        std::vector<std::string> batch;
        for (auto k = start; k < end; ++k) batch.push_back(texts[misses[k]]);
        auto vectors = with_retries([&] { return backend().embed(batch, config_.embed_model); });
        if (vectors.size() != batch.size()) {
            throw TransportError("provider returned " + std::to_string(vectors.size()) + " embeddings for " +
                                     std::to_string(batch.size()) + " inputs",
                                 false);
        }
        for (auto k = start; k < end; ++k) {
            const auto i = misses[k];
            out[i].values = std::move(vectors[k - start]);
            if (out[i].dimension() != config_.embed_dimension) break;  // reported below
            store(hashes[i], canonicals[i], Json(out[i].values).dump());
        }
    }

    for (const auto& v : out) {
        if (v.dimension() != config_.embed_dimension) {
            throw DimensionMismatch("embedding has dimension " + std::to_string(v.dimension()) + ", expected " +
                                    std::to_string(config_.embed_dimension));
        }
    }
    return out;
}

std::vector<double> Gateway::rerank(const RerankRequest& request) {
    if (request.candidate_texts.empty()) throw std::invalid_argument("rerank: empty candidate list");
    if (config_.rerank_mode == RerankMode::Lexical) {
        log({"rerank-lexical", "", "", false});
        return lexical_rerank(request);
    }
    const auto canonical = canonical_rerank_request(request, config_.rerank_model);
    const auto hash = text::sha256_hex(canonical.dump());
    if (auto hit = lookup(hash)) {
        log({"rerank", "", hash, true});
        return Json::parse(*hit).get<std::vector<double>>();
    }
    log({"rerank", "", hash, false});
    if (config_.mode == Mode::Replay) throw CacheMiss("no recorded rerank scores (request " + hash.substr(0, 12) + ")");
    auto scores = with_retries([&] { return backend().rerank(request, config_.rerank_model); });
    if (scores.size() != request.candidate_texts.size()) {
        throw TransportError("rerank score count does not match candidates", false);
    }
    store(hash, canonical, Json(scores).dump());
    return scores;
}

}  // namespace brqual::provider
