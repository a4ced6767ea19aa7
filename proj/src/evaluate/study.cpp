#include "brqual/evaluate/study.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace brqual::evaluate {

std::string_view to_string(Metric m) { return m == Metric::TfIdf ? "TF-IDF" : "W2V"; }

SectionTexts section_texts(const StructuredReport& report) {
    SectionTexts out;
    for (auto kind : kRequiredSections) out[kind] = report.section(kind).content;
    return out;
}

namespace {

Json texts_json(const SectionTexts& t) {
    Json j = Json::object();
    for (const auto& [kind, text] : t) j[std::string(short_name(kind))] = text;
    return j;
}

SectionTexts texts_from_json(const Json& j, const char* field) {
    if (!j.contains(field)) throw SchemaError(std::string("study triple: missing field ") + field);
    const auto& obj = j.at(field);
    if (!obj.is_object()) throw SchemaError(std::string("study triple: ") + field + " must be an object");
    SectionTexts out;
    for (const auto& [name, value] : obj.items()) {
        auto kind = parse_section_kind(name);
        if (!kind) throw SchemaError("study triple: unknown section '" + name + "'");
        out[*kind] = value.is_null() ? std::string{} : value.get<std::string>();
    }
    return out;
}

const std::string& text_of(const SectionTexts& t, SectionKind kind) {
    static const std::string kEmpty;
    auto it = t.find(kind);
    return it == t.end() ? kEmpty : it->second;
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Json component_json(const ComponentScore& c) { return Json{{"tfidf_cosine", c.tfidf}, {"embedding_cosine", c.embedding}}; }

}  // namespace

void to_json(Json& j, const StudyTriple& t) {
    j = Json{{"key", t.key},
             {"raw", texts_json(t.raw)},
             {"improved_a", texts_json(t.improved_a)},
             {"improved_b", texts_json(t.improved_b)},
             {"ground_truth", texts_json(t.ground_truth)}};
}

void from_json(const Json& j, StudyTriple& t) {
    if (!j.contains("key")) throw SchemaError("study triple: missing field key");
    t.key = j.at("key").get<std::string>();
    t.raw = texts_from_json(j, "raw");
    t.improved_a = texts_from_json(j, "improved_a");
    t.improved_b = texts_from_json(j, "improved_b");
    t.ground_truth = texts_from_json(j, "ground_truth");
}

void to_json(Json& j, const SimilarityScores& s) {
    Json sections = Json::object();
    for (const auto& [kind, score] : s.sections) sections[std::string(short_name(kind))] = component_json(score);
    j = Json{{"key", s.key}, {"sections", sections}, {"average", component_json(s.average)}};
}

void to_json(Json& j, const StatTestResult& r) {
    j = Json{{"component", r.component ? std::string(short_name(*r.component)) : std::string("Avg")},
             {"metric", to_string(r.metric)},
             {"mean_raw", r.mean_raw},
             {"mean_a", r.mean_a},
             {"mean_b", r.mean_b},
             {"w_statistic", r.w_statistic},
             {"p_value", r.p_value},
             {"corrected_alpha", r.corrected_alpha},
             {"significant", r.significant},
             {"cliffs_delta", r.cliffs_delta},
             {"magnitude", to_string(r.magnitude)},
             {"pairs", r.pairs}};
    if (!r.note.empty()) j["note"] = r.note;
}

void to_json(Json& j, const StudyReport& r) {
    j = Json{{"triples", r.triples},
             {"corrected_alpha", r.corrected_alpha},
             {"variants", Json{{"a", r.name_a}, {"b", r.name_b}}},
             {"raw", r.raw},
             {"improved_a", r.improved_a},
             {"improved_b", r.improved_b},
             {"tests", r.tests},
             {"averages", r.averages},
             {"warnings", r.warnings}};
}

StudyReport run_similarity_study(const std::vector<StudyTriple>& input, const WordVectors& table,
                                 const StudyOptions& options) {
    if (input.size() < kMinStudyTriples) {
        throw InsufficientData("similarity study needs at least " + std::to_string(kMinStudyTriples) +
                               " triples, got " + std::to_string(input.size()));
    }
    if (table.size() == 0) throw EmptyTable("word-vector table is empty");

    std::vector<StudyTriple> triples = input;
    std::sort(triples.begin(), triples.end(), [](const auto& a, const auto& b) { return a.key < b.key; });

    std::map<SectionKind, TfIdfModel> models;
    for (auto kind : kStudyComponents) {
        if (options.corpus) {
            models.emplace(kind, TfIdfModel(*options.corpus));
            continue;
        }
        std::vector<std::string> corpus;
        for (const auto& t : triples) {
            for (const auto* v : {&t.raw, &t.improved_a, &t.improved_b, &t.ground_truth}) {
                corpus.push_back(text_of(*v, kind));
            }
        }
        models.emplace(kind, TfIdfModel(corpus));
    }

    struct Scored {
        SimilarityScores raw, a, b;
        std::vector<std::string> warnings;
    };
    auto score_triple = [&](const StudyTriple& t) {
        Scored s;
        auto score = [&](const SectionTexts& version, const char* label) {
            SimilarityScores out;
            out.key = t.key;
            for (auto kind : kStudyComponents) {
                const auto& doc = text_of(version, kind);
                const auto& truth = text_of(t.ground_truth, kind);
                std::vector<std::string> w;
                ComponentScore c;
                c.tfidf = models.at(kind).cosine(doc, truth);
                c.embedding = embedding_cosine(doc, truth, table, &w);
                for (auto& msg : w) {
                    s.warnings.push_back(t.key + " " + label + " " + std::string(short_name(kind)) + ": " + msg);
                }
                out.average.tfidf += c.tfidf / static_cast<double>(kStudyComponents.size());
                out.average.embedding += c.embedding / static_cast<double>(kStudyComponents.size());
                out.sections[kind] = c;
            }
            return out;
        };
        s.raw = score(t.raw, "raw");
        s.a = score(t.improved_a, "a");
        s.b = score(t.improved_b, "b");
        return s;
    };
    auto scored = parallel_map(triples, options.workers, score_triple);

    StudyReport report;
    report.triples = triples.size();
    report.name_a = options.name_a;
    report.name_b = options.name_b;
    report.corrected_alpha = bonferroni(options.alpha, kStudyComponents.size() * 2);
    for (auto& s : scored) {
        report.raw.push_back(std::move(s.raw));
        report.improved_a.push_back(std::move(s.a));
        report.improved_b.push_back(std::move(s.b));
        for (auto& w : s.warnings) report.warnings.push_back(std::move(w));
    }

    auto run_test = [&](std::optional<SectionKind> component, Metric metric) {
        auto column = [&](const std::vector<SimilarityScores>& rows) {
            std::vector<double> v;
            for (const auto& r : rows) v.push_back(component ? r.sections.at(*component).get(metric) : r.average.get(metric));
            return v;
        };
        const auto raw = column(report.raw);
        const auto a = column(report.improved_a);
        const auto b = column(report.improved_b);
        StatTestResult r;
        r.component = component;
        r.metric = metric;
        r.mean_raw = mean(raw);
        r.mean_a = mean(a);
        r.mean_b = mean(b);
        r.corrected_alpha = report.corrected_alpha;
        try {
            const auto w = wilcoxon_signed_rank(b, a);
            r.w_statistic = w.w_statistic;
            r.p_value = w.p_value;
            r.pairs = w.n;
        } catch (const TooFewPairs& e) {
            r.p_value = 1.0;
            r.pairs = nonzero_differences(b, a).size();
            r.note = e.what();
        }
        r.significant = r.p_value <= r.corrected_alpha;
        const auto d = cliffs_delta(b, a);
        r.cliffs_delta = d.delta;
        r.magnitude = d.magnitude;
        return r;
    };
    for (auto metric : {Metric::TfIdf, Metric::Embedding}) {
        for (auto kind : kStudyComponents) report.tests.push_back(run_test(kind, metric));
        report.averages.push_back(run_test(std::nullopt, metric));
    }
    return report;
}

std::string format_study_table(const StudyReport& report) {
    std::string out;
    char line[192];
    std::snprintf(line, sizeof line, "%-7s %-5s %8s %9s %9s %8s %8s %6s %-10s\n", "Type", "Metric", "Raw",
                  report.name_a.substr(0, 9).c_str(), report.name_b.substr(0, 9).c_str(), "Diff.", "p", "delta",
                  "Magnitude");
    out += line;
    auto row = [&](const StatTestResult& r, bool first) {
        const std::string type = first ? std::string(to_string(r.metric)) : std::string();
        const std::string component = r.component ? std::string(short_name(*r.component)) : std::string("Avg.");
        char p[16];
        if (r.p_value < 0.001) {
            std::snprintf(p, sizeof p, "<0.001");
        } else {
            std::snprintf(p, sizeof p, "%.3f", r.p_value);
        }
        std::snprintf(line, sizeof line, "%-7s %-5s %7.1f%% %8.1f%% %8.1f%% %+7.1f%% %7s%s %6.2f %-10s\n",
                      type.c_str(), component.c_str(), 100 * r.mean_raw, 100 * r.mean_a, 100 * r.mean_b,
                      100 * (r.mean_b - r.mean_a), p, r.significant ? "*" : " ", r.cliffs_delta,
                      std::string(to_string(r.magnitude)).c_str());
        out += line;
    };
    for (auto metric : {Metric::TfIdf, Metric::Embedding}) {
        bool first = true;
        for (const auto& r : report.tests) {
            if (r.metric != metric) continue;
            row(r, first);
            first = false;
        }
        for (const auto& r : report.averages) {
            if (r.metric == metric) row(r, false);
        }
    }
    std::snprintf(line, sizeof line, "%zu triples; %zu tests; Bonferroni alpha = %.4f (* = significant)\n",
                  report.triples, report.tests.size(), report.corrected_alpha);
    out += line;
    return out;
}

}  // namespace brqual::evaluate
