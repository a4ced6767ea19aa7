#pragma once

#include "brqual/core/json.hpp"
#include "brqual/core/model.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace brqual::ingest {

/// Stratum name used for unresolved issues (null or absent resolution).
inline constexpr std::string_view kUnresolvedStratum = "Null (Open)";

struct FetchQuery {
    std::string project_key = "MC";
    std::optional<Timestamp> created_after;
    std::size_t max_results = 1000;
    std::optional<std::vector<std::string>> resolution_filter;
    std::size_t page_size = 100;
};

/// JQL for the search endpoint, e.g.
/// project = "MC" AND created >= "2025-02-01 00:00" ORDER BY created ASC, key ASC
std::string build_jql(const FetchQuery& query);

/// Field list requested from the search endpoint.
std::string requested_fields();

/// Maps one Jira issue payload ({key, fields: {...}}) onto a RawBugReport.
/// Throws SchemaError naming the issue key and the missing field.
RawBugReport map_issue(const Json& issue);

std::string stratum_of(const RawBugReport& report);

class TrackerSource {
public:
    virtual ~TrackerSource() = default;
    virtual std::vector<RawBugReport> fetch(const FetchQuery& query) = 0;
};

/// Read-only client for the Jira REST search endpoint. Pages after the first
/// are fetched with bounded parallelism; results keep API order and are
/// de-duplicated by issue key.
class JiraClient : public TrackerSource {
public:
    explicit JiraClient(std::string base_url, std::size_t parallelism = 4);
    std::vector<RawBugReport> fetch(const FetchQuery& query) override;

private:
    Json fetch_page(const FetchQuery& query, std::size_t start_at, std::size_t count) const;
    std::string base_url_;
    std::size_t parallelism_;
};

/// Offline source: a directory of raw issue payloads (*.json, one issue per
/// file, or a search page with an "issues" array). Filename order stands in
/// for API order. Query filters are applied locally.
class FixtureTracker : public TrackerSource {
public:
    explicit FixtureTracker(std::filesystem::path directory);
    std::vector<RawBugReport> fetch(const FetchQuery& query) override;

private:
    std::filesystem::path directory_;
};

/// Validates the query, fetches through the source and enforces the
/// max_results cap and key uniqueness.
std::vector<RawBugReport> fetch_reports(TrackerSource& source, const FetchQuery& query);

struct DuplicateLink {
    std::string key;
    std::string target_key;
};

/// Issue links whose type names a duplicate relation; helps pick ground
/// truth reports by hand.
std::vector<DuplicateLink> duplicate_links(const std::vector<RawBugReport>& corpus);

}  // namespace brqual::ingest
