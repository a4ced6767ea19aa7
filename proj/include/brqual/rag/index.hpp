#pragma once

#include "brqual/core/json.hpp"
#include "brqual/core/model.hpp"
#include "brqual/provider/gateway.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace brqual::rag {

struct KnowledgeDocument {
    std::string title;
    std::string url;
    std::string body;
};

void from_json(const Json& j, KnowledgeDocument& d);
void to_json(Json& j, const KnowledgeDocument& d);

struct KnowledgeChunk {
    std::string chunk_id;
    std::string source_title;
    std::string source_url;
    std::size_t ordinal = 0;
    std::string text;
    provider::EmbeddingVector embedding;

    bool operator==(const KnowledgeChunk&) const = default;
};

void to_json(Json& j, const KnowledgeChunk& c);
void from_json(const Json& j, KnowledgeChunk& c);

struct IndexMetadata {
    std::string built_at;
    std::string embed_model;
    std::size_t chunk_size = 1000;
    std::size_t overlap = 200;

    bool operator==(const IndexMetadata&) const = default;
};

inline constexpr int kIndexFormatVersion = 1;

/// Exact brute-force cosine store. Immutable once built.
class VectorIndex {
public:
    VectorIndex() = default;
    VectorIndex(std::vector<KnowledgeChunk> chunks, std::size_t dimension, IndexMetadata metadata);

    const std::vector<KnowledgeChunk>& chunks() const { return chunks_; }
    std::size_t dimension() const { return dimension_; }
    const IndexMetadata& metadata() const { return metadata_; }
    std::size_t size() const { return chunks_.size(); }
    bool empty() const { return chunks_.empty(); }

    /// Cosine between the query and chunk i (0 for zero vectors).
    double similarity(const std::vector<double>& query, double query_norm, std::size_t i) const;

    /// Writes <dir>/index.json (manifest) and <dir>/chunks.jsonl.
    void save(const std::filesystem::path& dir) const;
    static VectorIndex load(const std::filesystem::path& dir);

private:
    std::vector<KnowledgeChunk> chunks_;
    std::vector<double> norms_;
    std::size_t dimension_ = 0;
    IndexMetadata metadata_;
};

struct ChunkSpan {
    std::size_t begin;
    std::size_t end;
};

/// Windows of at most chunk_size characters. A window ends at the last
/// whitespace inside the limit when there is one, and the next window
/// starts up to `overlap` characters earlier, moved forward to a word start.
std::vector<ChunkSpan> chunk_spans(std::string_view body, std::size_t chunk_size = 1000, std::size_t overlap = 200);

/// First 16 hex digits of sha256("<source_id>#<ordinal>").
std::string make_chunk_id(std::string_view source_id, std::size_t ordinal);

struct IngestOptions {
    std::size_t chunk_size = 1000;
    std::size_t overlap = 200;
    std::string built_at;
};

struct IngestResult {
    VectorIndex index;
    std::vector<std::string> warnings;  // skipped documents
};

/// Chunks and embeds every document. Documents with blank bodies are
/// skipped with a warning; throws EmptyDocument if nothing remains.
IngestResult ingest_knowledge(const std::vector<KnowledgeDocument>& documents, provider::Gateway& gateway,
                              const IngestOptions& options);

std::vector<KnowledgeDocument> load_documents(const std::filesystem::path& path);

}  // namespace brqual::rag
