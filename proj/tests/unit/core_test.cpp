#include "brqual/core/error.hpp"
#include "brqual/core/json.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/parallel.hpp"
#include "brqual/core/text.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <stdexcept>

using namespace brqual;

TEST(Text, Tokenize) {
    EXPECT_EQ(text::tokenize("The Game crashed, v1.21!"),
              (std::vector<std::string>{"the", "game", "crashed", "v1", "21"}));
    EXPECT_TRUE(text::tokenize("  ...  ").empty());
}

TEST(Text, WhitespaceHelpers) {
    EXPECT_EQ(text::collapse_whitespace("  a \t b\n\n c  "), "a b c");
    EXPECT_EQ(text::trim("\n x y \t"), "x y");
    EXPECT_TRUE(text::iequals("Steps", "sTEPS"));
    EXPECT_TRUE(text::istarts_with("Expected Result", "expected"));
    EXPECT_EQ(text::split_lines("a\r\nb\nc").size(), 3u);
    EXPECT_EQ(text::join({"a", "b"}, ", "), "a, b");
}

TEST(Text, Substance) {
    EXPECT_FALSE(text::is_substantive(""));
    EXPECT_FALSE(text::is_substantive("it crashes"));
    EXPECT_TRUE(text::is_substantive("the game crashes"));
}

TEST(Text, TokenOverlap) {
    EXPECT_DOUBLE_EQ(text::token_overlap("", "anything"), 1.0);
    EXPECT_DOUBLE_EQ(text::token_overlap("a b c d", "a b c"), 0.75);
    EXPECT_TRUE(text::fuzzy_contained("Open the WORLD", "please open the world now"));
    EXPECT_FALSE(text::fuzzy_contained("open the door", "open the world"));
}

TEST(Text, ListMarkers) {
    EXPECT_EQ(text::list_marker("1. Open"), "1. ");
    EXPECT_EQ(text::list_marker("2) Close"), "2) ");
    EXPECT_EQ(text::list_marker("- item"), "- ");
    EXPECT_EQ(text::list_marker("# step"), "# ");
    EXPECT_EQ(text::list_marker("1.21 is out"), "");
    EXPECT_EQ(text::strip_list_marker("* Jump"), "Jump");
}

TEST(Text, Sha256KnownVector) {
    EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Model, Timestamps) {
    const auto t = parse_timestamp("2025-02-03T04:05:06.789+0100");
    EXPECT_EQ(format_timestamp(t), "2025-02-03T03:05:06Z");
    EXPECT_EQ(format_timestamp(parse_timestamp("2025-02-03T04:05:06Z")), "2025-02-03T04:05:06Z");
    EXPECT_EQ(parse_timestamp("2025-02-03T04:05:06+01:00"), parse_timestamp("2025-02-03T03:05:06Z"));
    EXPECT_ANY_THROW(parse_timestamp("yesterday"));
}

TEST(Model, SectionNames) {
    EXPECT_EQ(parse_section_kind("s2r"), SectionKind::StepsToReproduce);
    EXPECT_EQ(parse_section_kind("ExpectedBehavior"), SectionKind::ExpectedBehavior);
    EXPECT_EQ(parse_section_kind("ENV"), SectionKind::Environment);
    EXPECT_FALSE(parse_section_kind("steps").has_value());
    for (auto k : kAllSections) {
        EXPECT_EQ(parse_section_kind(to_string(k)), k);
        EXPECT_EQ(parse_section_kind(short_name(k)), k);
    }
}

TEST(Model, StepsFollowS2RSection) {
    auto r = StructuredReport::blank("MC-1");
    EXPECT_EQ(r.sections.size(), 4u);
    r.set_section(SectionKind::StepsToReproduce, "1. Open a world\n\n2) Jump", Provenance::HeaderMatched);
    EXPECT_EQ(r.s2r_steps, (std::vector<std::string>{"Open a world", "Jump"}));
    EXPECT_TRUE(validate_structured_report(r, ReportOrigin::Preprocessor).empty());
    r.set_section(SectionKind::ObservedBehavior, "x", Provenance::Generated);
    EXPECT_FALSE(validate_structured_report(r, ReportOrigin::Preprocessor).empty());
    EXPECT_TRUE(validate_structured_report(r, ReportOrigin::Improver).empty());
}

TEST(Model, InvariantViolationsAreReported) {
    auto r = StructuredReport::blank("MC-1");
    r.sections[SectionKind::ObservedBehavior] = Section{"text", Provenance::Absent};
    EXPECT_FALSE(validate_structured_report(r).empty());
    r = StructuredReport::blank("MC-1");
    r.sections[SectionKind::ObservedBehavior] = Section{"", Provenance::HeaderMatched};
    EXPECT_FALSE(validate_structured_report(r).empty());
}

TEST(Model, MergeFlagDeduplicates) {
    std::vector<IssueFlag> flags;
    IssueFlag f{SectionKind::ExpectedBehavior, IssueClass::Missing, "a", FlagSource::Heuristic};
    EXPECT_TRUE(merge_flag(flags, f));
    f.detail = "b";
    EXPECT_FALSE(merge_flag(flags, f));
    f.source = FlagSource::LlmAnalyzer;
    EXPECT_TRUE(merge_flag(flags, f));
    EXPECT_LT(severity_rank(IssueClass::Missing), severity_rank(IssueClass::Enhance));
}

TEST(Json, RawReportRoundTrip) {
    RawBugReport r;
    r.key = "MC-9";
    r.summary = "Crash";
    r.description = "It crashes";
    r.created = parse_timestamp("2025-02-02T00:00:00Z");
    r.updated = r.created;
    r.status = "Open";
    r.comments.push_back({"bob", "same", r.created});
    r.affected_versions = {"1.21.4"};
    r.issue_links.push_back({"Duplicate", "MC-1"});
    const Json j = r;
    EXPECT_EQ(j.get<RawBugReport>(), r);
    auto s = StructuredReport::blank("MC-9");
    s.set_section(SectionKind::Environment, "Windows 11", Provenance::MetadataEnriched);
    EXPECT_EQ(Json(s).get<StructuredReport>(), s);
}

TEST(Jsonl, WriteRead) {
    const auto path = std::filesystem::temp_directory_path() / "brqual_core_test.jsonl";
    jsonl::write_lines(path, {Json{{"a", 1}}, Json{{"a", 2}}});
    const auto back = jsonl::read_lines(path);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1]["a"], 2);
    EXPECT_THROW(jsonl::read<RawBugReport>(path), SchemaError);
    std::filesystem::remove(path);
}

TEST(Parallel, KeepsOrderAndRethrows) {
    std::vector<int> xs(100);
    for (int i = 0; i < 100; ++i) xs[i] = i;
    const auto ys = parallel_map(xs, 4, [](const int& x) { return x * x; });
    for (int i = 0; i < 100; ++i) EXPECT_EQ(ys[i], i * i);
    EXPECT_THROW(parallel_map(xs, 3,
                              [](const int& x) {
                                  if (x == 42) throw std::runtime_error("boom");
                                  return x;
                              }),
                 std::runtime_error);
    EXPECT_TRUE(parallel_map(std::vector<int>{}, 4, [](const int& x) { return x; }).empty());
}
