#include "brqual/core/error.hpp"
#include "brqual/core/text.hpp"
#include "brqual/rag/index.hpp"
#include "brqual/rag/retrieval.hpp"
#include "fixture_model.hpp"
#include "fixtures.hpp"
#include "synthetic_index.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace brqual;
using namespace brqual::rag;

namespace {

std::unique_ptr<provider::Gateway> live_gateway(provider::RerankMode rerank = provider::RerankMode::Remote) {
    auto cfg = testkit::fixture_config().gateway_config();
    cfg.mode = provider::Mode::Live;
    cfg.rerank_mode = rerank;
    return std::make_unique<provider::Gateway>(cfg, std::make_unique<testkit::FixtureModel>(64));
}

}  // namespace

TEST(Chunking, WindowsRespectSizeAndOverlap) {
    std::mt19937_64 gen(9);
    std::uniform_int_distribution<int> word(1, 12), words(0, 400);
    for (int t = 0; t < 100; ++t) {
        std::string body;
        for (int w = words(gen); w > 0; --w) body += std::string(word(gen), 'a' + w % 26) + " ";
        const std::size_t size = 60, overlap = 15;
        const auto spans = chunk_spans(body, size, overlap);
        if (text::trim(body).empty()) continue;
        ASSERT_FALSE(spans.empty());
        std::size_t covered = spans.front().begin;
        for (std::size_t i = 0; i < spans.size(); ++i) {
            EXPECT_LE(spans[i].end - spans[i].begin, size);
            EXPECT_LT(spans[i].begin, spans[i].end);
            if (i) {
                EXPECT_GT(spans[i].begin, spans[i - 1].begin);
                EXPECT_LE(spans[i].begin, spans[i - 1].end);  // no gaps
                EXPECT_GE(spans[i].begin + overlap, spans[i - 1].end);
            }
            covered = std::max(covered, spans[i].end);
        }
        EXPECT_TRUE(text::trim(std::string_view(body).substr(covered)).empty());
    }
    EXPECT_THROW(chunk_spans("abc", 10, 10), std::invalid_argument);
}

TEST(Chunking, ChunkIds) {
    EXPECT_EQ(make_chunk_id("doc", 3), text::sha256_hex("doc#3").substr(0, 16));
    EXPECT_NE(make_chunk_id("doc", 3), make_chunk_id("doc", 4));
}

TEST(Index, SaveLoadRoundTrip) {
    const auto index = testkit::synthetic_index();
    const auto dir = std::filesystem::temp_directory_path() / "brqual_index_test";
    std::filesystem::remove_all(dir);
    index.save(dir);
    const auto back = VectorIndex::load(dir);
    EXPECT_EQ(back.chunks(), index.chunks());
    EXPECT_EQ(back.metadata(), index.metadata());
    std::filesystem::remove_all(dir);
    EXPECT_THROW(VectorIndex::load(dir), ArtifactError);
}

TEST(Index, RejectsBadChunks) {
    auto chunks = testkit::synthetic_index().chunks();
    chunks[3].embedding.values.pop_back();
    EXPECT_THROW(VectorIndex(chunks, testkit::kSyntheticDim, {}), DimensionMismatch);
    chunks = testkit::synthetic_index().chunks();
    chunks[4].chunk_id = chunks[5].chunk_id;
    EXPECT_THROW(VectorIndex(chunks, testkit::kSyntheticDim, {}), SchemaError);
}

TEST(Ingest, SkipsBlankDocuments) {
    auto gateway = live_gateway();
    std::vector<KnowledgeDocument> docs{{"A", "u", std::string(900, 'x') + " tail words here"}, {"B", "u", "   "}};
    IngestOptions options;
    options.chunk_size = 400;
    options.overlap = 80;
    const auto result = ingest_knowledge(docs, *gateway, options);
    EXPECT_EQ(result.warnings.size(), 1u);
    EXPECT_GE(result.index.size(), 3u);
    for (const auto& c : result.index.chunks()) EXPECT_EQ(c.source_title, "A");
    EXPECT_THROW(ingest_knowledge({{"B", "u", ""}}, *gateway, options), EmptyDocument);
}

TEST(Ingest, ShippedKnowledgeLoads) {
    const auto docs = load_documents(testkit::fixture_path("knowledge"));
    EXPECT_GE(docs.size(), 20u);
    const auto index = VectorIndex::load(testkit::fixture_path("models/kb"));
    EXPECT_EQ(index.dimension(), 64u);
    EXPECT_GE(index.size(), docs.size());
}

TEST(Queries, ParseAndFallback) {
    EXPECT_EQ(parse_queries("1. \"hopper lag\"\n- hopper lag\n\n* chunk loading\n"),
              (std::vector<std::string>{"hopper lag", "chunk loading"}));
    EXPECT_EQ(parse_queries("a\nb\nc\nd\ne\nf\ng").size(), kMaxQueries);
    EXPECT_EQ(fallback_queries("Summary", "desc"), std::vector<std::string>{"Summary"});
    EXPECT_EQ(fallback_queries(" ", std::string(300, 'd'))[0].size(), kFallbackQueryChars);
    EXPECT_TRUE(fallback_queries("", "").empty());
}

TEST(Funnel, CandidatesAreTheTrueTopK) {
    const auto index = testkit::synthetic_index();
    std::mt19937_64 gen(13);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 50; ++t) {
        std::vector<std::vector<double>> queries(1 + t % 3, std::vector<double>(testkit::kSyntheticDim));
        for (auto& q : queries)
            for (auto& x : q) x = nd(gen);
        const auto candidates = rank_candidates(index, queries, 40);
        const auto expected = testkit::oracle_top_k(index, queries, 40);
        ASSERT_EQ(candidates.size(), 40u);
        for (std::size_t i = 0; i < 40; ++i) {
            EXPECT_EQ(candidates[i].index, expected[i]);
            EXPECT_EQ(candidates[i].chunk_id, index.chunks()[expected[i]].chunk_id);
            if (i) EXPECT_GE(candidates[i - 1].similarity, candidates[i].similarity);
        }
    }
}

TEST(Funnel, RerankKeepsFifteenFromTheCandidates) {
    const auto index = testkit::synthetic_index();
    auto gateway = live_gateway();
    const auto candidates = retrieve_candidates(index, {"redstone hopper", "creeper chunk"}, *gateway, 40);
    const auto selected = rerank_and_select(index, candidates, "redstone hopper creeper", *gateway, 15);
    ASSERT_EQ(selected.size(), 15u);
    std::set<std::string> pool;
    for (const auto& c : candidates) pool.insert(c.chunk_id);
    for (std::size_t i = 0; i < selected.size(); ++i) {
        EXPECT_TRUE(pool.count(selected[i].chunk_id));
        if (i) EXPECT_GE(selected[i - 1].rerank_score, selected[i].rerank_score);
    }
    EXPECT_EQ(rerank_and_select(index, {candidates.begin(), candidates.begin() + 4}, "x", *gateway, 15).size(), 4u);
}

TEST(Funnel, RerankFailureFallsBackToLexical) {
    const auto index = testkit::synthetic_index();
    auto cfg = testkit::fixture_config().gateway_config();
    cfg.rerank_mode = provider::RerankMode::Remote;
    cfg.cache_path = std::filesystem::temp_directory_path() / "brqual_rag_empty.jsonl";
    std::filesystem::remove(cfg.cache_path);
    provider::Gateway empty(cfg);
    const auto candidates = rank_candidates(index, {index.chunks()[0].embedding.values}, 40);
    std::vector<std::string> warnings;
    const auto selected = rerank_and_select(index, candidates, "redstone", empty, 15, &warnings);
    EXPECT_EQ(selected.size(), 15u);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(Funnel, FullRetrievalIsDeterministic) {
    const auto index = testkit::synthetic_index();
    auto g1 = live_gateway(), g2 = live_gateway();
    const auto a = retrieve(index, "Hopper stops moving items", "A redstone hopper chain stops.", *g1,
                            testkit::shipped_catalog());
    const auto b = retrieve(index, "Hopper stops moving items", "A redstone hopper chain stops.", *g2,
                            testkit::shipped_catalog());
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a.queries.empty());
    EXPECT_LE(a.queries.size(), kMaxQueries);
    EXPECT_EQ(a.candidates.size(), 40u);
    EXPECT_EQ(a.selected.size(), 15u);
    const auto none = retrieve(index, "", "", *g1, testkit::shipped_catalog());
    EXPECT_TRUE(none.candidates.empty());
    EXPECT_FALSE(none.warnings.empty());
}
