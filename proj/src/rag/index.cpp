#include "brqual/rag/index.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

namespace brqual::rag {

void from_json(const Json& j, KnowledgeDocument& d) {
    if (!j.contains("title") || !j.contains("body")) throw SchemaError("knowledge document needs title and body");
    d.title = j.at("title").get<std::string>();
    d.url = j.value("url", "");
    d.body = j.at("body").get<std::string>();
}

void to_json(Json& j, const KnowledgeDocument& d) { j = Json{{"title", d.title}, {"url", d.url}, {"body", d.body}}; }

void to_json(Json& j, const KnowledgeChunk& c) {
    j = Json{{"chunk_id", c.chunk_id},   {"source_title", c.source_title}, {"source_url", c.source_url},
             {"ordinal", c.ordinal},     {"text", c.text},                 {"embedding", c.embedding.values}};
}

void from_json(const Json& j, KnowledgeChunk& c) {
    for (const char* field : {"chunk_id", "source_title", "text", "embedding"}) {
        if (!j.contains(field)) throw SchemaError(std::string("missing field: ") + field);
    }
    c.chunk_id = j.at("chunk_id").get<std::string>();
    c.source_title = j.at("source_title").get<std::string>();
    c.source_url = j.value("source_url", "");
    c.ordinal = j.value("ordinal", std::size_t{0});
    c.text = j.at("text").get<std::string>();
    c.embedding.values = j.at("embedding").get<std::vector<double>>();
}

namespace {

double norm_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

bool is_ws(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

VectorIndex::VectorIndex(std::vector<KnowledgeChunk> chunks, std::size_t dimension, IndexMetadata metadata)
    : chunks_(std::move(chunks)), dimension_(dimension), metadata_(std::move(metadata)) {
    if (dimension_ == 0) throw SchemaError("vector index dimension must be positive");
    std::set<std::string> ids;
    for (const auto& c : chunks_) {
        if (c.text.empty()) throw SchemaError("chunk " + c.chunk_id + " has empty text");
        if (c.embedding.dimension() != dimension_) {
            throw DimensionMismatch("chunk " + c.chunk_id + " has dimension " + std::to_string(c.embedding.dimension()) +
                                    ", index has " + std::to_string(dimension_));
        }
        if (!ids.insert(c.chunk_id).second) throw SchemaError("duplicate chunk_id " + c.chunk_id);
        norms_.push_back(norm_of(c.embedding.values));
    }
}

double VectorIndex::similarity(const std::vector<double>& query, double query_norm, std::size_t i) const {
    const auto& v = chunks_[i].embedding.values;
    if (query.size() != v.size()) {
        throw DimensionMismatch("query has dimension " + std::to_string(query.size()) + ", index has " +
                                std::to_string(v.size()));
    }
    if (query_norm == 0.0 || norms_[i] == 0.0) return 0.0;
    double dot = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) dot += query[k] * v[k];
    return std::clamp(dot / (query_norm * norms_[i]), -1.0, 1.0);
}

void VectorIndex::save(const std::filesystem::path& dir) const {
    Json manifest{{"format_version", kIndexFormatVersion},
                  {"dimension", dimension_},
                  {"chunk_count", chunks_.size()},
                  {"chunks_file", "chunks.jsonl"},
                  {"metadata",
                   {{"built_at", metadata_.built_at},
                    {"embed_model", metadata_.embed_model},
                    {"chunk_size", metadata_.chunk_size},
                    {"overlap", metadata_.overlap}}}};
    jsonl::write_file(dir / "index.json", manifest.dump(2) + "\n");
    jsonl::write(dir / "chunks.jsonl", chunks_);
}

VectorIndex VectorIndex::load(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "index.json";
    if (!std::filesystem::exists(manifest_path)) throw ArtifactError("no vector index at " + dir.string());
    Json manifest;
    try {
        manifest = Json::parse(jsonl::read_file(manifest_path));
        if (manifest.at("format_version").get<int>() != kIndexFormatVersion) {
            throw SchemaError("unsupported index format_version " + manifest.at("format_version").dump());
        }
        IndexMetadata meta;
        const auto& m = manifest.at("metadata");
        meta.built_at = m.value("built_at", "");
        meta.embed_model = m.value("embed_model", "");
        meta.chunk_size = m.value("chunk_size", std::size_t{1000});
        meta.overlap = m.value("overlap", std::size_t{200});
        auto chunks = jsonl::read<KnowledgeChunk>(dir / manifest.value("chunks_file", "chunks.jsonl"));
        if (chunks.size() != manifest.at("chunk_count").get<std::size_t>()) {
            throw SchemaError("index " + dir.string() + ": chunk_count does not match chunks file");
        }
        return VectorIndex(std::move(chunks), manifest.at("dimension").get<std::size_t>(), std::move(meta));
    } catch (const Json::exception& e) {
        throw SchemaError("index " + dir.string() + ": " + e.what());
    }
}

std::vector<ChunkSpan> chunk_spans(std::string_view body, std::size_t chunk_size, std::size_t overlap) {
    if (chunk_size == 0 || overlap >= chunk_size) throw std::invalid_argument("chunking needs 0 <= overlap < chunk_size");
    std::vector<ChunkSpan> spans;
    std::size_t start = 0;
    while (start < body.size() && is_ws(body[start])) ++start;
    while (start < body.size()) {
        std::size_t end = std::min(body.size(), start + chunk_size);
        if (end < body.size()) {
            // Prefer to stop at whitespace (which then belongs to neither side).
            std::size_t cut = end;
            while (cut > start && !is_ws(body[cut])) --cut;
            if (cut > start) end = cut;
        }
        spans.push_back({start, end});
        if (end >= body.size()) break;
        std::size_t next = end > overlap ? end - overlap : 0;
        if (next > start && !is_ws(body[next - 1])) {
            // Mid-word: move forward to the next word start when one exists
            // before the window end; otherwise keep the hard overlap.
            std::size_t p = next;
            while (p < end && !is_ws(body[p])) ++p;
            if (p < end) next = p;
        }
        while (next < end && is_ws(body[next])) ++next;
        if (next <= start || next >= end) next = end;
        while (next < body.size() && is_ws(body[next])) ++next;
        start = next;
    }
    return spans;
}

std::string make_chunk_id(std::string_view source_id, std::size_t ordinal) {
    std::string key(source_id);
    key += "#";
    key += std::to_string(ordinal);
    return text::sha256_hex(key).substr(0, 16);
}

IngestResult ingest_knowledge(const std::vector<KnowledgeDocument>& documents, provider::Gateway& gateway,
                              const IngestOptions& options) {
    if (documents.empty()) throw EmptyDocument("no knowledge documents to ingest");
    IngestResult result;
    std::vector<KnowledgeChunk> chunks;
    std::map<std::string, std::size_t> source_uses;
    for (const auto& doc : documents) {
        if (text::trim(doc.body).empty()) {
            result.warnings.push_back("skipped empty document '" + doc.title + "'");
            continue;
        }
        std::string source_id = doc.url.empty() ? doc.title : doc.url;
        // Repeated sources get a deterministic suffix so ids stay unique.
        if (auto n = source_uses[source_id]++; n > 0) source_id += "~" + std::to_string(n);
        std::size_t ordinal = 0;
        for (const auto& span : chunk_spans(doc.body, options.chunk_size, options.overlap)) {
            KnowledgeChunk c;
            c.chunk_id = make_chunk_id(source_id, ordinal);
            c.source_title = doc.title;
            c.source_url = doc.url;
            c.ordinal = ordinal++;
            c.text = std::string(doc.body.substr(span.begin, span.end - span.begin));
            chunks.push_back(std::move(c));
        }
    }
    if (chunks.empty()) throw EmptyDocument("every knowledge document was empty");

    std::vector<std::string> texts;
    for (const auto& c : chunks) texts.push_back(c.text);
    auto vectors = gateway.embed(texts);
    for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i].embedding = std::move(vectors[i]);

    IndexMetadata meta{options.built_at, gateway.config().embed_model, options.chunk_size, options.overlap};
    const auto dimension = chunks.front().embedding.dimension();
    result.index = VectorIndex(std::move(chunks), dimension, std::move(meta));
    return result;
}

std::vector<KnowledgeDocument> load_documents(const std::filesystem::path& path) {
    if (std::filesystem::is_directory(path)) {
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(path)) {
            if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        std::vector<KnowledgeDocument> docs;
        for (const auto& f : files) {
            for (auto& d : jsonl::read<KnowledgeDocument>(f)) docs.push_back(std::move(d));
        }
        return docs;
    }
    return jsonl::read<KnowledgeDocument>(path);
}

}  // namespace brqual::rag
