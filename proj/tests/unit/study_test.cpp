#include "brqual/core/error.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/evaluate/study.hpp"

#include <gtest/gtest.h>

using namespace brqual;
using namespace brqual::evaluate;

namespace {

std::filesystem::path fixture(const char* name) { return std::filesystem::path(BRQUAL_FIXTURE_DIR) / name; }

}  // namespace

TEST(Study, FixtureTriplesProduceTableShape) {
    const auto triples = jsonl::read<StudyTriple>(fixture("study_triples.jsonl"));
    ASSERT_EQ(triples.size(), 10u);
    const auto table = WordVectors::load(fixture("word_vectors.txt"));
    const auto report = run_similarity_study(triples, table);
    EXPECT_EQ(report.triples, 10u);
    ASSERT_EQ(report.tests.size(), 6u);
    EXPECT_EQ(report.averages.size(), 2u);
    EXPECT_NEAR(report.corrected_alpha, 0.05 / 6, 1e-15);
    for (const auto& t : report.tests) {
        EXPECT_EQ(t.significant, t.p_value <= t.corrected_alpha);
        EXPECT_GE(t.p_value, 0.0);
        EXPECT_LE(t.p_value, 1.0);
        EXPECT_LT(t.mean_raw, t.mean_a);
        EXPECT_LT(t.mean_raw, t.mean_b);
        EXPECT_GE(t.cliffs_delta, -1.0);
        EXPECT_LE(t.cliffs_delta, 1.0);
    }
    const auto text = format_study_table(report);
    EXPECT_NE(text.find("TF-IDF"), std::string::npos);
    EXPECT_NE(text.find("W2V"), std::string::npos);
}

TEST(Study, DeterministicUnderParallelScoring) {
    const auto triples = jsonl::read<StudyTriple>(fixture("study_triples.jsonl"));
    const auto table = WordVectors::load(fixture("word_vectors.txt"));
    StudyOptions one, four;
    four.workers = 4;
    EXPECT_EQ(Json(run_similarity_study(triples, table, one)).dump(),
              Json(run_similarity_study(triples, table, four)).dump());
}

TEST(Study, TooFewTriples) {
    const auto triples = jsonl::read<StudyTriple>(fixture("study_triples.jsonl"));
    const auto table = WordVectors::load(fixture("word_vectors.txt"));
    EXPECT_THROW(run_similarity_study({triples.begin(), triples.begin() + 4}, table), InsufficientData);
}

TEST(Study, IdenticalVersionsYieldNoteNotFailure) {
    auto triples = jsonl::read<StudyTriple>(fixture("study_triples.jsonl"));
    for (auto& t : triples) t.improved_a = t.improved_b;
    const auto report = run_similarity_study(triples, WordVectors::load(fixture("word_vectors.txt")));
    for (const auto& t : report.tests) {
        EXPECT_EQ(t.p_value, 1.0);
        EXPECT_FALSE(t.significant);
        EXPECT_FALSE(t.note.empty());
    }
}

TEST(Study, TripleJsonRoundTrip) {
    const auto triples = jsonl::read<StudyTriple>(fixture("study_triples.jsonl"));
    const Json j = triples.front();
    const auto back = j.get<StudyTriple>();
    EXPECT_EQ(back.key, triples.front().key);
    EXPECT_EQ(back.improved_b, triples.front().improved_b);
    EXPECT_THROW((Json{{"key", "x"}, {"raw", {{"Foo", ""}}}}.get<StudyTriple>()), SchemaError);
}
