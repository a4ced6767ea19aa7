#include "brqual/preprocess/rules.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/json.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#ifndef BRQUAL_DATA_DIR
#define BRQUAL_DATA_DIR "data"
#endif

namespace brqual::preprocess {

std::optional<SectionKind> HeuristicSignal::winner(double threshold) const {
    std::optional<SectionKind> best;
    double best_vote = 0.0;
    double runner_up = 0.0;
    for (const auto& [kind, vote] : section_votes) {
        if (!best || vote > best_vote) {
            runner_up = best ? best_vote : 0.0;
            best = kind;
            best_vote = vote;
        } else {
            runner_up = std::max(runner_up, vote);
        }
    }
    if (!best || best_vote < threshold || !(best_vote > runner_up)) return std::nullopt;
    return best;
}

namespace {

std::vector<std::string> phrase_tokens(const std::string& s) { return text::tokenize(s); }

bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return false;
    return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

std::vector<std::string> strings(const Json& j, const char* key) {
    if (!j.contains(key)) return {};
    return j.at(key).get<std::vector<std::string>>();
}

std::string joined(const std::vector<std::string>& phrase) { return text::join(phrase, " "); }

// Strips heading markup ("h3.", "#", "**", "==") that may survive cleaning.
std::size_t skip_heading_markup(std::string_view line) {
    std::size_t i = 0;
    auto skip_space = [&] {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    };
    skip_space();
    if (i + 2 < line.size() && (line[i] == 'h' || line[i] == 'H') && line[i + 1] >= '1' && line[i + 1] <= '6' &&
        line[i + 2] == '.') {
        i += 3;
    }
    while (i < line.size() && (line[i] == '#' || line[i] == '*' || line[i] == '=' || line[i] == '_')) ++i;
    skip_space();
    return i;
}

}  // namespace

RuleSet RuleSet::load(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(jsonl::read_file(path));
    } catch (const Json::exception& e) {
        throw ConfigError("rules file " + path.string() + ": " + e.what());
    } catch (const ArtifactError& e) {
        throw ConfigError(e.what());
    }
    RuleSet r;
    try {
        r.version_ = j.at("version").get<std::string>();
        for (const auto& [name, phrases] : j.at("headers").items()) {
            auto kind = parse_section_kind(name);
            if (!kind) throw ConfigError("rules file " + path.string() + ": unknown section '" + name + "'");
            for (const auto& p : phrases) r.headers_.push_back({*kind, text::to_lower(p.get<std::string>())});
        }
        std::stable_sort(r.headers_.begin(), r.headers_.end(),
                         [](const Header& a, const Header& b) { return a.phrase.size() > b.phrase.size(); });

        const auto& cues = j.at("cues");
        for (auto& v : strings(cues, "action_verbs")) r.action_verbs_.push_back(text::to_lower(v));
        auto phrases = [&](const char* key) {
            std::vector<Phrase> out;
            for (const auto& s : strings(cues, key)) {
                auto t = phrase_tokens(s);
                if (!t.empty()) out.push_back(std::move(t));
            }
            return out;
        };
        r.failure_verbs_ = phrases("failure_verbs");
        r.negations_ = phrases("negations");
        r.modals_ = phrases("modals");
        r.os_names_ = phrases("os_names");
        r.editions_ = phrases("editions");
        for (const auto& p : strings(cues, "version_patterns")) {
            r.version_patterns_.emplace_back(p, std::regex::ECMAScript | std::regex::icase);
        }

        if (j.contains("weights")) {
            const auto& w = j.at("weights");
            r.list_marker_weight_ = w.value("list_marker", r.list_marker_weight_);
            r.action_verb_weight_ = w.value("action_verb", r.action_verb_weight_);
            r.environment_weight_ = w.value("environment", r.environment_weight_);
            r.failure_weight_ = w.value("failure_verb", r.failure_weight_);
            r.negation_weight_ = w.value("negation", r.negation_weight_);
            r.modal_weight_ = w.value("modal", r.modal_weight_);
            r.domain_weight_ = w.value("domain_term", r.domain_weight_);
        }
        r.threshold_ = j.value("threshold", 1.0);

        if (j.contains("domain_terms_file")) {
            auto terms_path = path.parent_path() / j.at("domain_terms_file").get<std::string>();
            std::set<std::string> seen;
            for (auto line : text::split_lines(jsonl::read_file(terms_path))) {
                auto term = text::to_lower(text::trim(line));
                if (term.empty() || term[0] == '#') continue;
                if (seen.insert(term).second) r.domain_terms_.push_back(term);
            }
        }
    } catch (const Json::exception& e) {
        throw ConfigError("rules file " + path.string() + ": " + e.what());
    } catch (const std::regex_error& e) {
        throw ConfigError("rules file " + path.string() + ": bad version pattern: " + e.what());
    } catch (const ArtifactError& e) {
        throw ConfigError(e.what());
    }
    return r;
}

const RuleSet& RuleSet::builtin() {
    static const RuleSet kRules = load(std::filesystem::path(BRQUAL_DATA_DIR) / "rules" / "rules.v1.json");
    return kRules;
}

std::optional<HeaderMatch> RuleSet::match_header(std::string_view line) const {
    const auto start = skip_heading_markup(line);
    const auto rest = line.substr(start);
    for (const auto& h : headers_) {
        if (!text::istarts_with(rest, h.phrase)) continue;
        std::size_t i = h.phrase.size();
        // Whole-word match only.
        if (i < rest.size() && std::isalnum(static_cast<unsigned char>(rest[i]))) continue;
        // Optional parenthesised abbreviation: "Observed Behavior (OB):".
        std::size_t j = i;
        while (j < rest.size() && (rest[j] == ' ' || rest[j] == '\t')) ++j;
        if (j < rest.size() && rest[j] == '(') {
            auto close = rest.find(')', j);
            if (close != std::string_view::npos && close - j <= 6) i = close + 1;
        }
        while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t' || rest[i] == '*' || rest[i] == '_')) ++i;
        if (i == rest.size()) return HeaderMatch{h.section, line.size()};
        if (rest[i] == ':' || rest[i] == '-') {
            ++i;
            while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t' || rest[i] == '*')) ++i;
            return HeaderMatch{h.section, start + i};
        }
    }
    return std::nullopt;
}

HeuristicSignal RuleSet::score(const SentenceSpan& sentence) const {
    HeuristicSignal signal;
    signal.sentence = sentence;
    auto vote = [&](SectionKind kind, double weight, std::string cue) {
        signal.section_votes[kind] += weight;
        signal.matched_cues.push_back(std::move(cue));
    };

    const auto marker = text::list_marker(sentence.text);
    const auto body = std::string_view(sentence.text).substr(marker.size());
    const auto tokens = text::tokenize(body);

    if (!marker.empty()) vote(SectionKind::StepsToReproduce, list_marker_weight_, "list_marker");
    if (!tokens.empty() &&
        std::find(action_verbs_.begin(), action_verbs_.end(), tokens.front()) != action_verbs_.end()) {
        vote(SectionKind::StepsToReproduce, action_verb_weight_, "action_verb:" + tokens.front());
    }

    for (const auto& re : version_patterns_) {
        if (std::regex_search(sentence.text, re)) {
            vote(SectionKind::Environment, environment_weight_, "version");
            break;
        }
    }
    for (const auto& os : os_names_) {
        if (contains_phrase(tokens, os)) {
            vote(SectionKind::Environment, environment_weight_, "os:" + joined(os));
            break;
        }
    }
    for (const auto& ed : editions_) {
        if (contains_phrase(tokens, ed)) {
            vote(SectionKind::Environment, environment_weight_, "edition:" + joined(ed));
            break;
        }
    }

    for (const auto& v : failure_verbs_) {
        if (contains_phrase(tokens, v)) {
            vote(SectionKind::ObservedBehavior, failure_weight_, "failure_verb:" + joined(v));
            break;
        }
    }
    for (const auto& n : negations_) {
        if (contains_phrase(tokens, n)) {
            vote(SectionKind::ObservedBehavior, negation_weight_, "negation:" + joined(n));
            break;
        }
    }
    for (const auto& m : modals_) {
        if (contains_phrase(tokens, m)) {
            vote(SectionKind::ExpectedBehavior, modal_weight_, "modal:" + joined(m));
            break;
        }
    }

    // Domain terms strengthen an S2R or OB reading that some other cue
    // already suggested; on their own they say nothing about the section.
    for (const auto& term : domain_terms_) {
        if (std::find(tokens.begin(), tokens.end(), term) == tokens.end()) continue;
        for (auto kind : {SectionKind::StepsToReproduce, SectionKind::ObservedBehavior}) {
            auto it = signal.section_votes.find(kind);
            if (it != signal.section_votes.end() && it->second > 0) {
                vote(kind, domain_weight_, "domain:" + term);
            }
        }
        break;
    }
    return signal;
}

}  // namespace brqual::preprocess
