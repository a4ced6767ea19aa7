#include "brqual/core/json.hpp"

#include "brqual/core/error.hpp"

namespace brqual {

namespace {

template <typename Enum, typename Parse>
Enum enum_from(const Json& j, Parse parse, const char* what) {
    auto text = j.get<std::string>();
    auto value = parse(text);
    if (!value) throw SchemaError(std::string("unknown ") + what + ": " + text);
    return *value;
}

template <typename T>
void opt_to(Json& j, const char* name, const std::optional<T>& v) {
    j[name] = v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const Json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

const Json& required(const Json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw SchemaError(std::string("missing field: ") + name);
    return *it;
}

std::optional<Verdict> parse_verdict(std::string_view text) {
    if (text == "Pass") return Verdict::Pass;
    if (text == "Fail") return Verdict::Fail;
    return std::nullopt;
}

std::optional<FlagSource> parse_flag_source(std::string_view text) {
    for (auto s : {FlagSource::Classifier, FlagSource::Heuristic, FlagSource::LlmAnalyzer}) {
        if (text == to_string(s)) return s;
    }
    return std::nullopt;
}

}  // namespace

void to_json(Json& j, const SectionKind& v) { j = std::string(to_string(v)); }
void from_json(const Json& j, SectionKind& v) {
    v = enum_from<SectionKind>(j, parse_section_kind, "section kind");
}
void to_json(Json& j, const Provenance& v) { j = std::string(to_string(v)); }
void from_json(const Json& j, Provenance& v) { v = enum_from<Provenance>(j, parse_provenance, "provenance"); }
void to_json(Json& j, const IssueClass& v) { j = std::string(to_string(v)); }
void from_json(const Json& j, IssueClass& v) { v = enum_from<IssueClass>(j, parse_issue_class, "issue class"); }
void to_json(Json& j, const FlagSource& v) { j = std::string(to_string(v)); }
void from_json(const Json& j, FlagSource& v) { v = enum_from<FlagSource>(j, parse_flag_source, "flag source"); }
void to_json(Json& j, const Verdict& v) { j = v == Verdict::Pass ? "Pass" : "Fail"; }
void from_json(const Json& j, Verdict& v) { v = enum_from<Verdict>(j, parse_verdict, "verdict"); }

void to_json(Json& j, const Comment& v) {
    j = Json{{"author", v.author}, {"body", v.body}, {"created", format_timestamp(v.created)}};
}
void from_json(const Json& j, Comment& v) {
    v.author = j.value("author", "");
    v.body = j.value("body", "");
    v.created = parse_timestamp(required(j, "created").get<std::string>());
}

void to_json(Json& j, const IssueLink& v) {
    j = Json{{"link_type", v.link_type}, {"target_key", v.target_key}};
}
void from_json(const Json& j, IssueLink& v) {
    v.link_type = required(j, "link_type").get<std::string>();
    v.target_key = required(j, "target_key").get<std::string>();
}

void to_json(Json& j, const RawBugReport& v) {
    j = Json{{"key", v.key},
             {"summary", v.summary},
             {"description", v.description},
             {"created", format_timestamp(v.created)},
             {"updated", format_timestamp(v.updated)},
             {"status", v.status},
             {"comments", v.comments},
             {"affected_versions", v.affected_versions},
             {"issue_links", v.issue_links}};
    opt_to(j, "resolution", v.resolution);
    opt_to(j, "priority", v.priority);
}
void from_json(const Json& j, RawBugReport& v) {
    v.key = required(j, "key").get<std::string>();
    if (v.key.empty()) throw SchemaError("empty report key");
    v.summary = required(j, "summary").get<std::string>();
    v.description = j.value("description", "");
    v.created = parse_timestamp(required(j, "created").get<std::string>());
    v.updated = parse_timestamp(required(j, "updated").get<std::string>());
    v.status = j.value("status", "");
    v.resolution = opt_from<std::string>(j, "resolution");
    v.comments = j.value("comments", std::vector<Comment>{});
    v.affected_versions = j.value("affected_versions", std::vector<std::string>{});
    v.priority = opt_from<std::string>(j, "priority");
    v.issue_links = j.value("issue_links", std::vector<IssueLink>{});
}

void to_json(Json& j, const Section& v) {
    j = Json{{"content", v.content}, {"provenance", v.provenance}};
}
void from_json(const Json& j, Section& v) {
    v.content = j.value("content", "");
    v.provenance = required(j, "provenance").get<Provenance>();
}

void to_json(Json& j, const StructuredReport& v) {
    Json sections = Json::object();
    for (const auto& [kind, section] : v.sections) sections[std::string(to_string(kind))] = section;
    j = Json{{"key", v.key}, {"sections", sections}, {"s2r_steps", v.s2r_steps}};
}
void from_json(const Json& j, StructuredReport& v) {
    v.key = required(j, "key").get<std::string>();
    v.sections.clear();
    for (const auto& [name, section] : required(j, "sections").items()) {
        auto kind = parse_section_kind(name);
        if (!kind) throw SchemaError("unknown section kind: " + name);
        v.sections[*kind] = section.get<Section>();
    }
    v.s2r_steps = j.value("s2r_steps", std::vector<std::string>{});
}

void to_json(Json& j, const IssueFlag& v) {
    j = Json{{"section", v.section}, {"issue_class", v.issue_class}, {"detail", v.detail}, {"source", v.source}};
}
void from_json(const Json& j, IssueFlag& v) {
    v.section = required(j, "section").get<SectionKind>();
    v.issue_class = required(j, "issue_class").get<IssueClass>();
    v.detail = j.value("detail", "");
    v.source = required(j, "source").get<FlagSource>();
}

void to_json(Json& j, const DetectionResult& v) {
    j = Json{{"key", v.key},
             {"verdict", v.verdict},
             {"classifier_score", v.classifier_score},
             {"flags", v.flags},
             {"recommendations", v.recommendations},
             {"llm_invoked", v.llm_invoked},
             {"warnings", v.warnings}};
}
void from_json(const Json& j, DetectionResult& v) {
    v.key = required(j, "key").get<std::string>();
    v.verdict = required(j, "verdict").get<Verdict>();
    v.classifier_score = required(j, "classifier_score").get<double>();
    v.flags = j.value("flags", std::vector<IssueFlag>{});
    v.recommendations = j.value("recommendations", std::vector<std::string>{});
    v.llm_invoked = j.value("llm_invoked", false);
    v.warnings = j.value("warnings", std::vector<std::string>{});
}

}  // namespace brqual
