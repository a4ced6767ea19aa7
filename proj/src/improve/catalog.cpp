#include "brqual/improve/catalog.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/text.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace brqual::improve {

namespace {

struct Placeholder {
    std::size_t begin;
    std::size_t end;  // one past the closing braces
    std::string name;
};

std::vector<Placeholder> placeholders(std::string_view body) {
    std::vector<Placeholder> out;
    std::size_t pos = 0;
    while ((pos = body.find("{{", pos)) != std::string_view::npos) {
        auto close = body.find("}}", pos + 2);
        if (close == std::string_view::npos) break;
        auto name = text::trim_copy(body.substr(pos + 2, close - pos - 2));
        const bool identifier =
            !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
                return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
            });
        if (identifier) out.push_back({pos, close + 2, name});
        pos = close + 2;
    }
    return out;
}

}  // namespace

std::vector<std::string> slot_names(std::string_view body) {
    std::vector<std::string> out;
    for (auto& p : placeholders(body)) out.push_back(std::move(p.name));
    return out;
}

std::string render(std::string_view body, const std::map<std::string, std::string>& values) {
    std::string out;
    std::size_t last = 0;
    for (const auto& p : placeholders(body)) {
        auto it = values.find(p.name);
        if (it == values.end()) throw std::invalid_argument("no value for prompt slot '" + p.name + "'");
        out.append(body.substr(last, p.begin - last));
        out.append(it->second);
        last = p.end;
    }
    out.append(body.substr(last));
    return out;
}

std::vector<std::string> validate_template(const PromptTemplate& t) {
    std::vector<std::string> problems;
    if (t.prompt_id.empty()) problems.emplace_back("empty prompt_id");
    const auto used = slot_names(t.body);
    std::set<std::string> declared(t.slots.begin(), t.slots.end());
    for (const auto& slot : t.slots) {
        const auto n = std::count(used.begin(), used.end(), slot);
        if (n != 1) {
            problems.push_back("slot '" + slot + "' appears " + std::to_string(n) + " times in the body");
        }
    }
    for (const auto& slot : used) {
        if (!declared.count(slot)) problems.push_back("undeclared slot '" + slot + "' in the body");
    }
    if (t.section.has_value() != t.issue_class.has_value()) {
        problems.emplace_back("section and issue_class must be given together");
    }
    if (t.is_improvement()) {
        for (const auto& slot : improvement_slots()) {
            if (!declared.count(slot)) problems.push_back("improvement template lacks slot '" + slot + "'");
        }
        if (t.few_shot_pairs.empty()) problems.emplace_back("improvement template needs at least one few-shot pair");
    }
    return problems;
}

PromptTemplate parse_template(std::string_view file_text, const std::string& origin) {
    auto fail = [&](const std::string& why) { return ConfigError(origin + ": " + why); };
    std::string_view rest = file_text;
    if (rest.substr(0, 3) != "---") throw fail("template must start with '---' front-matter");
    auto header_start = rest.find('\n');
    if (header_start == std::string_view::npos) throw fail("unterminated front-matter");
    auto header_end = rest.find("\n---", header_start);
    if (header_end == std::string_view::npos) throw fail("unterminated front-matter");
    auto front = rest.substr(header_start + 1, header_end - header_start - 1);
    auto body_start = rest.find('\n', header_end + 4);
    auto body = body_start == std::string_view::npos ? std::string_view{} : rest.substr(body_start + 1);

    PromptTemplate t;
    try {
        YAML::Node node = YAML::Load(std::string(front));
        t.prompt_id = node["prompt_id"].as<std::string>("");
        if (auto s = node["section"]) {
            auto kind = parse_section_kind(s.as<std::string>());
            if (!kind) throw fail("unknown section '" + s.as<std::string>() + "'");
            t.section = kind;
        }
        if (auto c = node["issue_class"]) {
            auto cls = parse_issue_class(c.as<std::string>());
            if (!cls) throw fail("unknown issue_class '" + c.as<std::string>() + "'");
            t.issue_class = cls;
        }
        t.system_text = text::trim_copy(node["system"].as<std::string>(""));
        if (auto slots = node["slots"]) {
            for (const auto& s : slots) t.slots.push_back(s.as<std::string>());
        } else if (t.section) {
            t.slots = improvement_slots();
        }
        if (auto shots = node["few_shot"]) {
            for (const auto& pair : shots) {
                t.few_shot_pairs.push_back(
                    {text::trim_copy(pair["bad"].as<std::string>("")), text::trim_copy(pair["good"].as<std::string>(""))});
            }
        }
    } catch (const YAML::Exception& e) {
        throw fail(std::string("front-matter: ") + e.what());
    }
    t.body = text::trim_copy(body);
    return t;
}

PromptCatalog PromptCatalog::load(const std::filesystem::path& directory) {
    if (!std::filesystem::is_directory(directory)) {
        throw ConfigError("prompt catalog directory not found: " + directory.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".md" || ext == ".prompt")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    PromptCatalog catalog;
    for (const auto& file : files) catalog.add(parse_template(jsonl::read_file(file), file.string()));
    return catalog;
}

void PromptCatalog::add(PromptTemplate t) {
    auto problems = validate_template(t);
    if (!problems.empty()) throw ConfigError("template " + t.prompt_id + ": " + text::join(problems, "; "));
    if (templates_.count(t.prompt_id)) throw ConfigError("duplicate prompt_id " + t.prompt_id);
    auto id = t.prompt_id;
    templates_.emplace(std::move(id), std::move(t));
}

const PromptTemplate& PromptCatalog::get(const std::string& prompt_id) const {
    auto it = templates_.find(prompt_id);
    if (it == templates_.end()) throw CatalogMissing("prompt catalog has no template '" + prompt_id + "'");
    return it->second;
}

const PromptTemplate* PromptCatalog::find(SectionKind section, IssueClass issue_class) const {
    for (const auto& [id, t] : templates_) {
        if (t.section == section && t.issue_class == issue_class) return &t;
    }
    return nullptr;
}

std::vector<std::string> PromptCatalog::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, t] : templates_) out.push_back(id);
    return out;
}

}  // namespace brqual::improve
