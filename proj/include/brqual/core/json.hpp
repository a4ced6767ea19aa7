#pragma once

// JSON mapping for the shared domain types. Field names are the snake_case
// names used by the corpus JSONL format.

#include "brqual/core/model.hpp"

#include <json.hpp>

namespace brqual {

using Json = nlohmann::json;

void to_json(Json& j, const SectionKind& v);
void from_json(const Json& j, SectionKind& v);
void to_json(Json& j, const Provenance& v);
void from_json(const Json& j, Provenance& v);
void to_json(Json& j, const IssueClass& v);
void from_json(const Json& j, IssueClass& v);
void to_json(Json& j, const FlagSource& v);
void from_json(const Json& j, FlagSource& v);
void to_json(Json& j, const Verdict& v);
void from_json(const Json& j, Verdict& v);

void to_json(Json& j, const Comment& v);
void from_json(const Json& j, Comment& v);
void to_json(Json& j, const IssueLink& v);
void from_json(const Json& j, IssueLink& v);
void to_json(Json& j, const RawBugReport& v);
void from_json(const Json& j, RawBugReport& v);
void to_json(Json& j, const Section& v);
void from_json(const Json& j, Section& v);
void to_json(Json& j, const StructuredReport& v);
void from_json(const Json& j, StructuredReport& v);
void to_json(Json& j, const IssueFlag& v);
void from_json(const Json& j, IssueFlag& v);
void to_json(Json& j, const DetectionResult& v);
void from_json(const Json& j, DetectionResult& v);

}  // namespace brqual
