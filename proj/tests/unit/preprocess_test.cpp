#include "brqual/core/error.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/text.hpp"
#include "brqual/preprocess/clean.hpp"
#include "brqual/preprocess/extract.hpp"
#include "brqual/preprocess/rules.hpp"
#include "brqual/preprocess/segment.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace brqual;
using namespace brqual::preprocess;

namespace {

std::vector<std::string> texts(const std::vector<SentenceSpan>& spans) {
    std::vector<std::string> out;
    for (const auto& s : spans) out.push_back(s.text);
    return out;
}

std::set<SectionKind> filled(const StructuredReport& r) {
    std::set<SectionKind> out;
    for (const auto& [k, s] : r.sections)
        if (!s.empty()) out.insert(k);
    return out;
}

bool from_source(Provenance p) {
    return p == Provenance::LlmExtracted || p == Provenance::HeaderMatched || p == Provenance::HeuristicClassified;
}

// Every extracted section must come from the cleaned summary + description.
void expect_preserved(const RawBugReport& raw, const StructuredReport& r) {
    const auto source = clean_text(raw.summary + "\n" + raw.description).text;
    for (const auto& [kind, s] : r.sections) {
        if (!from_source(s.provenance)) continue;
        // Enrichment appends metadata to an extracted Environment section.
        std::string content = s.content;
        const auto meta = metadata_block(raw);
        if (!meta.empty() && content.size() >= meta.size() &&
            content.compare(content.size() - meta.size(), meta.size(), meta) == 0)
            content.resize(content.size() - meta.size());
        EXPECT_GE(text::token_overlap(content, source), 0.9) << raw.key << " " << to_string(kind);
    }
}

}  // namespace

TEST(Clean, SpecExamples) {
    const auto a = clean_text("See {color:red}this{color} at https://x.y/z");
    EXPECT_EQ(a.text, "See this at");
    EXPECT_EQ(a.removed_spans.size(), 2u);  // the colour pair and the URL
    const auto b = clean_text("plain text, nothing to do  ");
    EXPECT_EQ(b.text, "plain text, nothing to do  ");
    EXPECT_TRUE(b.removed_spans.empty());
    const auto c = clean_text("<b>crash</b>");
    EXPECT_EQ(c.text, "crash");
    ASSERT_EQ(c.removed_spans.size(), 2u);
    EXPECT_EQ(c.removed_spans[0].kind, SpanKind::HtmlTag);
}

TEST(Clean, WikiMarkupKeepsInnerText) {
    const auto r = clean_text("*Bold* and _italic_ then {code}give @p stone{code} and {noformat}log{noformat}");
    EXPECT_EQ(r.text, "Bold and italic then give @p stone and log");
    EXPECT_FALSE(contains_markup(r.text));
    EXPECT_TRUE(contains_markup("visit www.example.com"));
}

TEST(Clean, OutputNeverContainsMarkup) {
    for (const auto& raw : testkit::fixture_reports()) {
        EXPECT_FALSE(contains_markup(clean_text(raw.description).text)) << raw.key;
    }
}

TEST(Segment, SpecExamples) {
    EXPECT_EQ(texts(segment_sentences("I placed a block. It vanished.")),
              (std::vector<std::string>{"I placed a block.", "It vanished."}));
    EXPECT_EQ(texts(segment_sentences("Update to 1.21.4. Then crash.")),
              (std::vector<std::string>{"Update to 1.21.4.", "Then crash."}));
    EXPECT_EQ(texts(segment_sentences("1. Open world\n2. Break block")),
              (std::vector<std::string>{"1. Open world", "2. Break block"}));
}

TEST(Segment, AbbreviationsAndMarkers) {
    EXPECT_EQ(segment_sentences("Use a tool, e.g. An axe. Done.").size(), 2u);
    EXPECT_EQ(texts(segment_sentences("Works. - Next item")), (std::vector<std::string>{"Works.", "- Next item"}));
    EXPECT_TRUE(segment_sentences(" \n \n").empty());
}

TEST(Segment, SpansPartitionTheText) {
    for (const auto& raw : testkit::fixture_reports()) {
        const auto cleaned = clean_text(raw.description);
        const auto spans = segment_sentences(cleaned);
        std::size_t pos = 0;
        for (const auto& s : spans) {
            ASSERT_GE(s.start, pos) << raw.key;
            for (auto i = pos; i < s.start; ++i) EXPECT_TRUE(std::isspace(static_cast<unsigned char>(cleaned.text[i])));
            EXPECT_EQ(cleaned.text.substr(s.start, s.end - s.start), s.text);
            EXPECT_FALSE(s.text.empty());
            pos = s.end;
        }
        for (auto i = pos; i < cleaned.text.size(); ++i)
            EXPECT_TRUE(std::isspace(static_cast<unsigned char>(cleaned.text[i])));
    }
}

TEST(Rules, HeaderGrammar) {
    const auto& rules = RuleSet::builtin();
    EXPECT_EQ(rules.match_header("Steps to reproduce:")->section, SectionKind::StepsToReproduce);
    EXPECT_EQ(rules.match_header("h3. Expected Result")->section, SectionKind::ExpectedBehavior);
    EXPECT_EQ(rules.match_header("## What happened - it broke")->section, SectionKind::ObservedBehavior);
    EXPECT_EQ(rules.match_header("Affects: 1.21.4")->section, SectionKind::Environment);
    EXPECT_FALSE(rules.match_header("Steps are slippery in the rain").has_value());
    const auto m = rules.match_header("EB: no crash");
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(std::string("EB: no crash").substr(m->content_offset), "no crash");
}

TEST(Rules, CueVoting) {
    const auto& rules = RuleSet::builtin();
    const auto eb = rules.score({"The game should save the world", 0, 30});
    EXPECT_EQ(eb.winner(rules.threshold()), SectionKind::ExpectedBehavior);
    const auto ob = rules.score({"The game crashed when loading", 0, 29});
    EXPECT_EQ(ob.winner(rules.threshold()), SectionKind::ObservedBehavior);
    const auto s2r = rules.score({"1. Open the inventory", 0, 21});
    EXPECT_EQ(s2r.winner(rules.threshold()), SectionKind::StepsToReproduce);
    const auto env = rules.score({"Running Windows 11 on Java Edition 1.21.4", 0, 40});
    EXPECT_EQ(env.winner(rules.threshold()), SectionKind::Environment);
    for (const auto& sig : {eb, ob, s2r, env}) {
        std::size_t nonzero = 0;
        for (const auto& [_, v] : sig.section_votes) nonzero += v > 0;
        EXPECT_GE(sig.matched_cues.size(), nonzero);
    }
    EXPECT_FALSE(rules.score({"Hello there", 0, 11}).winner(rules.threshold()).has_value());
}

TEST(Heuristic, SpecExample) {
    const auto cleaned = clean_text("Steps to reproduce:\n1. Do X\n2. Do Y\nExpected: Z");
    const auto r = heuristic_extract_sections("", cleaned, StructuredReport::blank("MC-1"), RuleSet::builtin());
    EXPECT_EQ(r.section(SectionKind::StepsToReproduce).content, "1. Do X\n2. Do Y");
    EXPECT_EQ(r.s2r_steps.size(), 2u);
    EXPECT_EQ(r.section(SectionKind::ExpectedBehavior).content, "Z");
    EXPECT_EQ(r.section(SectionKind::ExpectedBehavior).provenance, Provenance::HeaderMatched);
}

TEST(Heuristic, NeverOverwritesFilledSections) {
    auto partial = StructuredReport::blank("MC-1");
    partial.set_section(SectionKind::ExpectedBehavior, "keep me", Provenance::LlmExtracted);
    const auto r = heuristic_extract_sections("", clean_text("The game crashed hard.\nExpected: replaced?"), partial,
                                              RuleSet::builtin());
    EXPECT_EQ(r.section(SectionKind::ExpectedBehavior), partial.section(SectionKind::ExpectedBehavior));
    EXPECT_EQ(r.section(SectionKind::ObservedBehavior).provenance, Provenance::HeuristicClassified);
}

TEST(Heuristic, CompletePartialIsIdentity) {
    auto full = StructuredReport::blank("MC-1");
    for (auto k : kAllSections) full.set_section(k, "x y z", Provenance::LlmExtracted);
    EXPECT_EQ(heuristic_extract_sections("s", clean_text("Expected: other"), full, RuleSet::builtin()), full);
}

TEST(Enrich, SpecExamples) {
    RawBugReport raw;
    raw.affected_versions = {"1.21.4"};
    auto r = enrich_metadata(StructuredReport::blank("MC-1"), raw);
    EXPECT_EQ(r.section(SectionKind::Environment).content, "Affects: 1.21.4");
    EXPECT_EQ(r.section(SectionKind::Environment).provenance, Provenance::MetadataEnriched);
    RawBugReport bare;
    EXPECT_EQ(enrich_metadata(StructuredReport::blank("MC-1"), bare), StructuredReport::blank("MC-1"));
    auto existing = StructuredReport::blank("MC-1");
    existing.set_section(SectionKind::Environment, "Windows 11", Provenance::HeaderMatched);
    raw.priority = "Low";
    r = enrich_metadata(existing, raw);
    EXPECT_EQ(r.section(SectionKind::Environment).content, "Windows 11\nAffects: 1.21.4\nPriority: Low");
    EXPECT_EQ(r.section(SectionKind::Environment).provenance, Provenance::HeaderMatched);
}

TEST(Extraction, ParsesAndGuardsCompletions) {
    const std::string source = "Observed behavior: the chest empties itself";
    const auto r = parse_extraction("MC-1", R"({"ObservedBehavior": "the chest empties itself", "EB": null})", source);
    EXPECT_EQ(r.section(SectionKind::ObservedBehavior).provenance, Provenance::LlmExtracted);
    EXPECT_TRUE(r.section(SectionKind::ExpectedBehavior).empty());
    EXPECT_THROW(parse_extraction("MC-1", R"({"ObservedBehavior": "a dragon appears in the sky"})", source),
                 MalformedCompletion);
    EXPECT_THROW(parse_extraction("MC-1", "not json", source), MalformedCompletion);
    EXPECT_THROW(parse_extraction("MC-1", R"({"Mood": "sad"})", source), MalformedCompletion);
}

TEST(Extraction, EmptyDescriptionShortCircuits) {
    auto gateway = testkit::replay_gateway();
    const auto r = llm_extract_sections("MC-1", "summary", clean_text(""), *gateway, testkit::shipped_catalog());
    EXPECT_EQ(r, StructuredReport::blank("MC-1"));
    EXPECT_TRUE(gateway->call_log().empty());
}

TEST(Extraction, MalformedCompletionMatchesHeuristicPath) {
    class Liar : public provider::Backend {
    public:
        std::string chat(const provider::ChatRequest&, const std::string&) override {
            return R"({"ObservedBehavior": "an invented statement nobody wrote"})";
        }
        std::vector<std::vector<double>> embed(const std::vector<std::string>&, const std::string&) override {
            return {};
        }
        std::vector<double> rerank(const provider::RerankRequest&, const std::string&) override { return {}; }
    };
    auto cfg = testkit::fixture_config().gateway_config();
    cfg.mode = provider::Mode::Live;
    provider::Gateway liar(cfg, std::make_unique<Liar>());
    for (const auto& raw : testkit::fixture_reports()) {
        const auto with = preprocess_report(raw, &liar, &testkit::shipped_catalog(), RuleSet::builtin());
        const auto without = preprocess_report(raw, nullptr, nullptr, RuleSet::builtin());
        EXPECT_EQ(with.report, without.report) << raw.key;
    }
}

// Header reports are recovered verbatim, all properties hold on every
// fixture, with and without the recorded completions.
TEST(PreprocessFixtures, PropertiesHoldOnEveryReport) {
    const auto raws = testkit::fixture_reports();
    ASSERT_GE(raws.size(), 30u);
    auto gateway = testkit::replay_gateway();
    std::map<std::string, Json> expected;
    for (const auto& e : jsonl::read_lines(testkit::fixture_path("preprocess_expectations.jsonl")))
        expected[e["key"]] = e["expected_sections"];
    for (const auto& raw : raws) {
        const auto cleaned = clean_text(raw.description);
        const auto heuristic = preprocess_report(raw, nullptr, nullptr, RuleSet::builtin());
        const auto llm = preprocess_report(raw, gateway.get(), &testkit::shipped_catalog(), RuleSet::builtin());
        for (const auto* r : {&heuristic.report, &llm.report}) {
            EXPECT_EQ(r->sections.size(), 4u) << raw.key;
            EXPECT_TRUE(validate_structured_report(*r, ReportOrigin::Preprocessor).empty()) << raw.key;
            expect_preserved(raw, *r);
        }
        // Monotonicity of the fallback over the LLM level.
        const auto extracted =
            llm_extract_sections(raw.key, raw.summary, cleaned, *gateway, testkit::shipped_catalog());
        const auto fallback = heuristic_extract_sections(raw.summary, cleaned, extracted, RuleSet::builtin());
        for (auto k : filled(extracted)) EXPECT_TRUE(filled(fallback).count(k)) << raw.key;
        for (auto k : filled(extracted)) EXPECT_EQ(fallback.section(k), extracted.section(k)) << raw.key;

        if (auto it = expected.find(raw.key); it != expected.end()) {
            for (const auto& [name, content] : it->second.items()) {
                const auto kind = *parse_section_kind(name);
                EXPECT_EQ(heuristic.report.section(kind).content, content.get<std::string>()) << raw.key << " " << name;
                EXPECT_EQ(heuristic.report.section(kind).provenance, Provenance::HeaderMatched);
            }
        }
    }
    EXPECT_GE(expected.size(), 10u);
}

TEST(PreprocessFixtures, EmptyDescriptionKeepsOnlyMetadata) {
    RawBugReport raw;
    raw.key = "MC-2";
    raw.summary = "Something";
    raw.affected_versions = {"1.21.4"};
    const auto r = preprocess_report(raw, nullptr, nullptr, RuleSet::builtin());
    for (auto k : kRequiredSections) EXPECT_TRUE(r.report.section(k).empty());
    EXPECT_EQ(r.report.section(SectionKind::Environment).provenance, Provenance::MetadataEnriched);
    EXPECT_FALSE(r.warnings.empty());
}

TEST(PreprocessFixtures, ReplayIsDeterministic) {
    const auto raws = testkit::fixture_reports();
    auto g1 = testkit::replay_gateway(), g2 = testkit::replay_gateway();
    for (const auto& raw : raws) {
        const auto a = preprocess_report(raw, g1.get(), &testkit::shipped_catalog(), RuleSet::builtin());
        const auto b = preprocess_report(raw, g2.get(), &testkit::shipped_catalog(), RuleSet::builtin());
        EXPECT_EQ(Json(a.report).dump(), Json(b.report).dump());
    }
}
