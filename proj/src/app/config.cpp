#include "brqual/app/config.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace brqual::app {

namespace fs = std::filesystem;

namespace {

std::string mode_name(provider::Mode m) {
    switch (m) {
        case provider::Mode::Live: return "live";
        case provider::Mode::Record: return "record";
        case provider::Mode::Replay: return "replay";
    }
    return "replay";
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

template <typename T>
T get(const Json& j, const char* section, const char* key) {
    try {
        return j.at(section).at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config ") + section + "." + key + ": " + e.what());
    }
}

bool compatible(const Json& a, const Json& b) {
    if (a.is_null() || b.is_null()) return true;
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

}  // namespace

provider::GatewayConfig PipelineConfig::gateway_config() const {
    provider::GatewayConfig g;
    g.mode = provider.mode;
    g.cache_path = provider.cache_path;
    g.base_url = provider.base_url;
    g.api_key = provider.api_key;
    g.chat_model = provider.chat_model;
    g.embed_model = provider.embed_model;
    g.rerank_model = provider.rerank_model;
    g.rerank_mode = provider.rerank_mode;
    g.embed_dimension = provider.embed_dimension;
    g.max_attempts = provider.max_attempts;
    g.max_in_flight = provider.max_in_flight;
    return g;
}

std::size_t PipelineConfig::worker_count() const {
    std::size_t n = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
    return std::min(n, std::max<std::size_t>(1, provider.max_in_flight));
}

Json config_to_json(const PipelineConfig& c) {
    Json j;
    j["tracker"] = {{"base_url", c.tracker.base_url},
                    {"project_key", c.tracker.project_key},
                    {"created_after", c.tracker.created_after},
                    {"max_results", c.tracker.max_results},
                    {"page_size", c.tracker.page_size},
                    {"parallelism", c.tracker.parallelism},
                    {"fixtures_dir", path_string(c.tracker.fixtures_dir)}};
    j["provider"] = {{"mode", mode_name(c.provider.mode)},
                     {"cache_path", path_string(c.provider.cache_path)},
                     {"base_url", c.provider.base_url},
                     {"api_key", c.provider.api_key},
                     {"chat_model", c.provider.chat_model},
                     {"embed_model", c.provider.embed_model},
                     {"rerank_model", c.provider.rerank_model},
                     {"rerank_mode", c.provider.rerank_mode == provider::RerankMode::Remote ? "remote" : "lexical"},
                     {"embed_dimension", c.provider.embed_dimension},
                     {"max_attempts", c.provider.max_attempts},
                     {"max_in_flight", c.provider.max_in_flight}};
    j["preprocess"] = {{"rules_path", path_string(c.preprocess.rules_path)}, {"use_llm", c.preprocess.use_llm}};
    j["detect"] = {{"model_path", path_string(c.detect.model_path)},
                   {"labeled_path", path_string(c.detect.labeled_path)},
                   {"threshold", c.detect.threshold ? Json(*c.detect.threshold) : Json(nullptr)}};
    j["rag"] = {{"knowledge_path", path_string(c.rag.knowledge_path)},
                {"index_dir", path_string(c.rag.index_dir)},
                {"pool_size", c.rag.pool_size},
                {"keep", c.rag.keep},
                {"chunk_size", c.rag.chunk_size},
                {"overlap", c.rag.overlap}};
    j["improve"] = {{"catalog_path", path_string(c.improve.catalog_path)}, {"token_budget", c.improve.token_budget}};
    j["eval"] = {{"embeddings_path", path_string(c.eval.embeddings_path)},
                 {"triples_path", path_string(c.eval.triples_path)},
                 {"annotations_path", path_string(c.eval.annotations_path)},
                 {"alpha", c.eval.alpha}};
    j["sample"] = {{"total", c.sample.total}, {"seed", c.sample.seed}, {"target_only", c.sample.target_only}};
    j["paths"] = {{"work_dir", path_string(c.work_dir)}};
    j["workers"] = c.workers;
    return j;
}

Json default_config_json() { return config_to_json(PipelineConfig{}); }

void merge_config(Json& base, const Json& patch, const std::string& origin) {
    if (!patch.is_object()) throw ConfigError(origin + ": configuration must be a JSON object");
    for (const auto& [key, value] : patch.items()) {
        if (!base.contains(key)) throw ConfigError(origin + ": unknown setting '" + key + "'");
        auto& target = base[key];
        if (target.is_object()) {
            if (!value.is_object()) throw ConfigError(origin + ": '" + key + "' must be an object");
            merge_config(target, value, origin + " " + key);
        } else {
            if (!compatible(target, value)) throw ConfigError(origin + ": '" + key + "' has the wrong type");
            target = value;
        }
    }
}

Json env_overrides(const Json& shape, const EnvLookup& env) {
    Json patch = Json::object();
    auto parse_value = [](const std::string& raw, const Json& like) {
        if (like.is_string()) return Json(raw);
        try {
            return Json::parse(raw);
        } catch (const nlohmann::json::exception&) {
            return Json(raw);
        }
    };
    auto upper = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        return s;
    };
    for (const auto& [section, value] : shape.items()) {
        if (value.is_object()) {
            for (const auto& [key, leaf] : value.items()) {
                if (auto v = env("BRQUAL_" + upper(section) + "_" + upper(key))) {
                    patch[section][key] = parse_value(*v, leaf);
                }
            }
        } else if (auto v = env("BRQUAL_" + upper(section))) {
            patch[section] = parse_value(*v, value);
        }
    }
    if (auto key = env("BRQUAL_API_KEY")) patch["provider"]["api_key"] = *key;
    return patch;
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

PipelineConfig config_from_json(const Json& j) {
    PipelineConfig c;
    c.tracker.base_url = get<std::string>(j, "tracker", "base_url");
    c.tracker.project_key = get<std::string>(j, "tracker", "project_key");
    c.tracker.created_after = get<std::string>(j, "tracker", "created_after");
    c.tracker.max_results = get<std::size_t>(j, "tracker", "max_results");
    c.tracker.page_size = get<std::size_t>(j, "tracker", "page_size");
    c.tracker.parallelism = get<std::size_t>(j, "tracker", "parallelism");
    c.tracker.fixtures_dir = get<std::string>(j, "tracker", "fixtures_dir");

    const auto mode = get<std::string>(j, "provider", "mode");
    auto parsed_mode = provider::parse_mode(mode);
    if (!parsed_mode) throw ConfigError("provider.mode must be live, record or replay, got '" + mode + "'");
    c.provider.mode = *parsed_mode;
    c.provider.cache_path = get<std::string>(j, "provider", "cache_path");
    c.provider.base_url = get<std::string>(j, "provider", "base_url");
    c.provider.api_key = get<std::string>(j, "provider", "api_key");
    c.provider.chat_model = get<std::string>(j, "provider", "chat_model");
    c.provider.embed_model = get<std::string>(j, "provider", "embed_model");
    c.provider.rerank_model = get<std::string>(j, "provider", "rerank_model");
    const auto rerank = get<std::string>(j, "provider", "rerank_mode");
    auto parsed_rerank = provider::parse_rerank_mode(rerank);
    if (!parsed_rerank) throw ConfigError("provider.rerank_mode must be remote or lexical, got '" + rerank + "'");
    c.provider.rerank_mode = *parsed_rerank;
    c.provider.embed_dimension = get<std::size_t>(j, "provider", "embed_dimension");
    c.provider.max_attempts = get<int>(j, "provider", "max_attempts");
    c.provider.max_in_flight = get<std::size_t>(j, "provider", "max_in_flight");

    c.preprocess.rules_path = get<std::string>(j, "preprocess", "rules_path");
    c.preprocess.use_llm = get<bool>(j, "preprocess", "use_llm");

    c.detect.model_path = get<std::string>(j, "detect", "model_path");
    c.detect.labeled_path = get<std::string>(j, "detect", "labeled_path");
    if (!j.at("detect").at("threshold").is_null()) c.detect.threshold = get<double>(j, "detect", "threshold");

    c.rag.knowledge_path = get<std::string>(j, "rag", "knowledge_path");
    c.rag.index_dir = get<std::string>(j, "rag", "index_dir");
    c.rag.pool_size = get<std::size_t>(j, "rag", "pool_size");
    c.rag.keep = get<std::size_t>(j, "rag", "keep");
    c.rag.chunk_size = get<std::size_t>(j, "rag", "chunk_size");
    c.rag.overlap = get<std::size_t>(j, "rag", "overlap");

    c.improve.catalog_path = get<std::string>(j, "improve", "catalog_path");
    c.improve.token_budget = get<std::size_t>(j, "improve", "token_budget");

    c.eval.embeddings_path = get<std::string>(j, "eval", "embeddings_path");
    c.eval.triples_path = get<std::string>(j, "eval", "triples_path");
    c.eval.annotations_path = get<std::string>(j, "eval", "annotations_path");
    c.eval.alpha = get<double>(j, "eval", "alpha");

    c.sample.total = get<std::size_t>(j, "sample", "total");
    c.sample.seed = get<std::uint64_t>(j, "sample", "seed");
    c.sample.target_only = get<bool>(j, "sample", "target_only");

    c.work_dir = get<std::string>(j, "paths", "work_dir");
    try {
        c.workers = j.at("workers").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config workers: ") + e.what());
    }
    return c;
}

void resolve_paths(PipelineConfig& c, const fs::path& base) {
    for (fs::path* p : {&c.tracker.fixtures_dir, &c.provider.cache_path, &c.preprocess.rules_path,
                        &c.detect.model_path, &c.detect.labeled_path, &c.rag.knowledge_path, &c.rag.index_dir,
                        &c.improve.catalog_path, &c.eval.embeddings_path, &c.eval.triples_path,
                        &c.eval.annotations_path, &c.work_dir}) {
        if (!p->empty() && p->is_relative()) *p = (base / *p).lexically_normal();
    }
}

PipelineConfig load_config(const std::optional<fs::path>& file, const Json& flag_patch, const EnvLookup& env) {
    Json doc = default_config_json();
    std::optional<fs::path> path = file;
    if (!path) {
        if (auto from_env = env("BRQUAL_CONFIG")) path = fs::path(*from_env);
    }
    fs::path file_base = fs::current_path();
    if (path) {
        if (!fs::exists(*path)) throw ConfigError("config file not found: " + path->string());
        Json parsed;
        try {
            parsed = Json::parse(jsonl::read_file(*path));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path->string() + ": " + e.what());
        }
        merge_config(doc, parsed, path->string());
        file_base = fs::absolute(*path).parent_path();
    }
    // Relative paths from the file resolve against its directory; flag and
    // environment values against the working directory.
    PipelineConfig from_file = config_from_json(doc);
    resolve_paths(from_file, file_base);
    doc = config_to_json(from_file);
    if (!flag_patch.is_null()) merge_config(doc, flag_patch, "command line");
    merge_config(doc, env_overrides(doc, env), "environment");
    PipelineConfig c = config_from_json(doc);
    resolve_paths(c, fs::current_path());
    validate_config(c);
    return c;
}

void validate_config(const PipelineConfig& c) {
    if (c.provider.mode != provider::Mode::Live && c.provider.cache_path.empty()) {
        throw ConfigError("provider.cache_path is required in record and replay mode");
    }
    if (c.provider.mode != provider::Mode::Replay && c.provider.api_key.empty() &&
        c.provider.base_url.find("localhost") == std::string::npos &&
        c.provider.base_url.find("127.0.0.1") == std::string::npos) {
        throw ConfigError("provider.api_key (or BRQUAL_API_KEY) is required outside replay mode");
    }
    if (c.provider.embed_dimension == 0) throw ConfigError("provider.embed_dimension must be positive");
    if (c.provider.max_attempts < 1) throw ConfigError("provider.max_attempts must be at least 1");
    if (c.provider.max_in_flight == 0) throw ConfigError("provider.max_in_flight must be positive");
    if (c.rag.keep == 0 || c.rag.keep > c.rag.pool_size) throw ConfigError("rag.keep must be in [1, rag.pool_size]");
    if (c.rag.overlap >= c.rag.chunk_size) throw ConfigError("rag.overlap must be smaller than rag.chunk_size");
    if (c.detect.threshold && (*c.detect.threshold < 0.0 || *c.detect.threshold > 1.0)) {
        throw ConfigError("detect.threshold must be in [0, 1]");
    }
    if (!(c.eval.alpha > 0.0 && c.eval.alpha < 1.0)) throw ConfigError("eval.alpha must be in (0, 1)");
    if (c.work_dir.empty()) throw ConfigError("paths.work_dir must be set");
    if (!c.tracker.created_after.empty()) {
        try {
            parse_timestamp(c.tracker.created_after);
        } catch (const std::exception& e) {
            throw ConfigError("tracker.created_after: " + std::string(e.what()));
        }
    }
    if (!c.tracker.fixtures_dir.empty() && !fs::is_directory(c.tracker.fixtures_dir)) {
        throw ConfigError("tracker.fixtures_dir is not a directory: " + c.tracker.fixtures_dir.string());
    }
}

Timestamp pipeline_now(const EnvLookup& env) {
    if (auto epoch = env("SOURCE_DATE_EPOCH")) {
        try {
            return Timestamp{std::chrono::seconds{std::stoll(*epoch)}};
        } catch (const std::exception&) {
            throw ConfigError("SOURCE_DATE_EPOCH must be an integer, got '" + *epoch + "'");
        }
    }
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

}  // namespace brqual::app
