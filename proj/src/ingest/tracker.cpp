#include "brqual/ingest/tracker.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/http.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <future>
#include <set>

namespace brqual::ingest {

namespace {

std::string quote(const std::string& value) {
    std::string out = "\"";
    for (char c : value) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out + "\"";
}

std::string jql_datetime(Timestamp ts) {
    // Jira accepts "yyyy-MM-dd HH:mm".
    auto iso = format_timestamp(ts);
    return iso.substr(0, 10) + " " + iso.substr(11, 5);
}

std::string name_of(const Json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_object()) {
        if (auto it = value.find("name"); it != value.end() && it->is_string()) return it->get<std::string>();
        if (auto it = value.find("value"); it != value.end() && it->is_string()) return it->get<std::string>();
    }
    return {};
}

const Json& required_field(const Json& fields, const char* name, const std::string& key) {
    auto it = fields.find(name);
    if (it == fields.end() || it->is_null()) {
        throw SchemaError("issue " + key + ": missing required field '" + name + "'");
    }
    return *it;
}

bool matches_resolution(const RawBugReport& report, const std::vector<std::string>& names) {
    const auto stratum = stratum_of(report);
    return std::any_of(names.begin(), names.end(), [&](const std::string& n) { return text::iequals(n, stratum); });
}

}  // namespace

std::string requested_fields() {
    return "summary,description,created,updated,status,resolution,comment,versions,priority,issuelinks";
}

std::string build_jql(const FetchQuery& query) {
    std::string jql = "project = " + quote(query.project_key);
    if (query.created_after) jql += " AND created >= " + quote(jql_datetime(*query.created_after));
    if (query.resolution_filter && !query.resolution_filter->empty()) {
        std::vector<std::string> named;
        bool unresolved = false;
        for (const auto& r : *query.resolution_filter) {
            if (text::iequals(r, kUnresolvedStratum)) {
                unresolved = true;
            } else {
                named.push_back(quote(r));
            }
        }
        std::string clause;
        if (!named.empty()) clause = "resolution in (" + text::join(named, ", ") + ")";
        if (unresolved) clause += (clause.empty() ? "" : " OR ") + std::string("resolution is EMPTY");
        jql += " AND (" + clause + ")";
    }
    return jql + " ORDER BY created ASC, key ASC";
}

RawBugReport map_issue(const Json& issue) {
    if (!issue.is_object()) throw SchemaError("issue payload is not an object");
    auto key_it = issue.find("key");
    if (key_it == issue.end() || !key_it->is_string() || key_it->get<std::string>().empty()) {
        throw SchemaError("issue payload missing required field 'key'");
    }
    RawBugReport report;
    report.key = key_it->get<std::string>();
    auto fields_it = issue.find("fields");
    if (fields_it == issue.end() || !fields_it->is_object()) {
        throw SchemaError("issue " + report.key + ": missing required field 'fields'");
    }
    const Json& f = *fields_it;

    const auto& summary = required_field(f, "summary", report.key);
    if (!summary.is_string()) throw SchemaError("issue " + report.key + ": field 'summary' is not text");
    report.summary = summary.get<std::string>();
    if (auto it = f.find("description"); it != f.end() && it->is_string()) report.description = it->get<std::string>();
    try {
        report.created = parse_timestamp(required_field(f, "created", report.key).get<std::string>());
        report.updated = parse_timestamp(required_field(f, "updated", report.key).get<std::string>());
    } catch (const Json::exception&) {
        throw SchemaError("issue " + report.key + ": timestamps must be text");
    }
    if (report.updated < report.created) {
        throw SchemaError("issue " + report.key + ": 'updated' precedes 'created'");
    }
    if (auto it = f.find("status"); it != f.end()) report.status = name_of(*it);
    if (auto it = f.find("resolution"); it != f.end() && !it->is_null()) {
        auto name = name_of(*it);
        if (!name.empty()) report.resolution = name;
    }
    if (auto it = f.find("priority"); it != f.end() && !it->is_null()) {
        auto name = name_of(*it);
        if (!name.empty()) report.priority = name;
    }
    if (auto it = f.find("versions"); it != f.end() && it->is_array()) {
        for (const auto& v : *it) {
            auto name = name_of(v);
            if (!name.empty()) report.affected_versions.push_back(name);
        }
    }
    if (auto it = f.find("comment"); it != f.end() && !it->is_null()) {
        const Json& list = it->is_object() ? it->value("comments", Json::array()) : *it;
        for (const auto& c : list) {
            Comment comment;
            if (auto a = c.find("author"); a != c.end()) {
                comment.author = a->is_object() ? a->value("displayName", a->value("name", "")) : name_of(*a);
            }
            comment.body = c.value("body", "");
            if (auto created = c.find("created"); created != c.end() && created->is_string()) {
                comment.created = parse_timestamp(created->get<std::string>());
            }
            report.comments.push_back(std::move(comment));
        }
    }
    if (auto it = f.find("issuelinks"); it != f.end() && it->is_array()) {
        for (const auto& link : *it) {
            IssueLink l;
            l.link_type = link.contains("type") ? name_of(link["type"]) : "";
            for (const char* side : {"outwardIssue", "inwardIssue"}) {
                if (auto s = link.find(side); s != link.end() && s->is_object()) {
                    l.target_key = s->value("key", "");
                    break;
                }
            }
            if (!l.target_key.empty()) report.issue_links.push_back(std::move(l));
        }
    }
    return report;
}

std::string stratum_of(const RawBugReport& report) {
    if (!report.resolution || text::trim(*report.resolution).empty()) return std::string(kUnresolvedStratum);
    return *report.resolution;
}

// --- live client -------------------------------------------------------------

JiraClient::JiraClient(std::string base_url, std::size_t parallelism)
    : base_url_(std::move(base_url)), parallelism_(std::max<std::size_t>(1, parallelism)) {}

Json JiraClient::fetch_page(const FetchQuery& query, std::size_t start_at, std::size_t count) const {
    net::HttpClient client(base_url_);
    auto response = client.get("/rest/api/2/search", {{"jql", build_jql(query)},
                                                      {"startAt", std::to_string(start_at)},
                                                      {"maxResults", std::to_string(count)},
                                                      {"fields", requested_fields()}},
                                {{"Accept", "application/json"}});
    if (response.status == 401 || response.status == 403) {
        throw AuthError("tracker rejected the request (HTTP " + std::to_string(response.status) + ")");
    }
    if (response.status != 200) {
        throw TransportError("tracker search returned HTTP " + std::to_string(response.status));
    }
    try {
        auto page = Json::parse(response.body);
        if (!page.contains("issues") || !page["issues"].is_array()) {
            throw SchemaError("search response missing 'issues' array");
        }
        return page;
    } catch (const Json::parse_error& e) {
        throw TransportError(std::string("unparseable search response: ") + e.what());
    }
}

std::vector<RawBugReport> JiraClient::fetch(const FetchQuery& query) {
    std::vector<RawBugReport> out;
    std::set<std::string> seen;
    auto absorb = [&](const Json& page) {
        for (const auto& issue : page["issues"]) {
            if (out.size() >= query.max_results) return;
            auto report = map_issue(issue);
            if (seen.insert(report.key).second) out.push_back(std::move(report));
        }
    };

    const auto first = fetch_page(query, 0, std::min(query.page_size, query.max_results));
    absorb(first);
    const auto total = std::min<std::size_t>(first.value("total", first["issues"].size()), query.max_results);

    std::vector<std::size_t> starts;
    for (auto start = query.page_size; start < total; start += query.page_size) starts.push_back(start);

    for (std::size_t batch = 0; batch < starts.size() && out.size() < query.max_results; batch += parallelism_) {
        std::vector<std::future<Json>> pending;
        for (auto i = batch; i < std::min(starts.size(), batch + parallelism_); ++i) {
            pending.push_back(std::async(std::launch::async, [this, &query, s = starts[i]] {
                return fetch_page(query, s, query.page_size);
            }));
        }
        bool exhausted = false;
        for (auto& f : pending) {
            auto page = f.get();
            if (page["issues"].empty()) exhausted = true;
            absorb(page);
        }
        if (exhausted) break;
    }
    return out;
}

// --- offline fixtures --------------------------------------------------------

FixtureTracker::FixtureTracker(std::filesystem::path directory) : directory_(std::move(directory)) {}

std::vector<RawBugReport> FixtureTracker::fetch(const FetchQuery& query) {
    if (!std::filesystem::is_directory(directory_)) {
        throw ArtifactError("fixture directory not found: " + directory_.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<RawBugReport> out;
    auto consider = [&](const Json& issue) {
        auto report = map_issue(issue);
        if (query.created_after && report.created < *query.created_after) return;
        if (query.resolution_filter && !matches_resolution(report, *query.resolution_filter)) return;
        out.push_back(std::move(report));
    };
    for (const auto& file : files) {
        Json payload;
        try {
            payload = Json::parse(jsonl::read_file(file));
        } catch (const Json::parse_error& e) {
            throw SchemaError(file.string() + ": " + e.what());
        }
        if (payload.contains("issues") && payload["issues"].is_array()) {
            for (const auto& issue : payload["issues"]) consider(issue);
        } else {
            consider(payload);
        }
    }
    return out;
}

std::vector<RawBugReport> fetch_reports(TrackerSource& source, const FetchQuery& query) {
    if (query.max_results == 0 || query.page_size == 0) {
        throw ConfigError("fetch query needs positive max_results and page_size");
    }
    auto reports = source.fetch(query);
    std::vector<RawBugReport> out;
    std::set<std::string> seen;
    for (auto& r : reports) {
        if (out.size() >= query.max_results) break;
        if (seen.insert(r.key).second) out.push_back(std::move(r));
    }
    return out;
}

std::vector<DuplicateLink> duplicate_links(const std::vector<RawBugReport>& corpus) {
    std::vector<DuplicateLink> out;
    for (const auto& report : corpus) {
        for (const auto& link : report.issue_links) {
            if (text::to_lower(link.link_type).find("duplicat") != std::string::npos) {
                out.push_back({report.key, link.target_key});
            }
        }
    }
    return out;
}

}  // namespace brqual::ingest
