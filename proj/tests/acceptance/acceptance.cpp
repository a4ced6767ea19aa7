// Acceptance harness: one PASS/FAIL line per criterion; exits non-zero when
// any criterion fails. Tolerances are fixed below.

#include "brqual/app/commands.hpp"
#include "brqual/app/pipeline.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/random.hpp"
#include "brqual/core/text.hpp"
#include "brqual/detect/classifier.hpp"
#include "brqual/detect/detector.hpp"
#include "brqual/evaluate/kappa.hpp"
#include "brqual/evaluate/similarity.hpp"
#include "brqual/evaluate/stats.hpp"
#include "brqual/evaluate/study.hpp"
#include "brqual/improve/improver.hpp"
#include "brqual/ingest/sampling.hpp"
#include "brqual/preprocess/clean.hpp"
#include "brqual/preprocess/extract.hpp"
#include "brqual/rag/retrieval.hpp"
#include "fixture_model.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "recorder.hpp"
#include "synthetic_index.hpp"
#include "table1.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace brqual;
namespace fs = std::filesystem;

namespace {

constexpr double kMoeTarget = 0.0304;
constexpr double kMoeTolerance = 0.0005;
constexpr double kStatsTolerance = 1e-12;
constexpr double kTfIdfTolerance = 1e-9;
constexpr double kRawCompletenessMax = 0.20;
constexpr double kImprovedCompletenessMin = 0.95;
constexpr double kPreserveOverlap = 0.9;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& why) {
        if (!ok && pass) {
            pass = false;
            detail = why;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(precision);
    s << v;
    return s.str();
}

fs::path scratch() {
    static const fs::path dir = fs::temp_directory_path() / ("brqual_acceptance_" + std::to_string(::getpid()));
    return dir;
}

int cli(const std::vector<std::string>& args, const fs::path& work) {
    std::ostringstream out, err;
    app::Hooks hooks;
    hooks.env = testkit::map_env(testkit::replay_env(work));
    std::vector<std::string> full{"--config", testkit::fixture_path("config.json").string()};
    full.insert(full.end(), args.begin(), args.end());
    const int code = app::run_cli(full, out, err, hooks);
    if (code != 0) std::cerr << err.str();
    return code;
}

bool run_pipeline(const fs::path& work) {
    for (const char* step : {"fetch", "preprocess", "detect", "improve", "ablate", "evaluate"})
        if (cli({step}, work) != 0) return false;
    return true;
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = jsonl::read_file(e.path());
    return out;
}

// --- 1 ------------------------------------------------------------------------
Outcome sampling() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto population = testkit::table1_population();
    const auto sample = ingest::stratified_sample(population, 996, 42);
    const double moe = ingest::margin_of_error(24998, 996, 0.5, 1.96);
    const double elapsed = seconds_since(t0);
    std::string counts;
    for (std::size_t i = 0; i < sample.table.size(); ++i) {
        counts += (i ? "," : "") + std::to_string(sample.table[i].sample_count);
        o.require(sample.table[i].sample_count == testkit::table1_sample_counts()[i],
                  "stratum " + sample.table[i].resolution_name + " got " + std::to_string(sample.table[i].sample_count));
    }
    o.require(sample.table.size() == 9 && sample.reports.size() == 996, "wrong sample shape");
    o.require(std::fabs(moe - kMoeTarget) <= kMoeTolerance, "margin of error " + fmt(moe, 5));
    o.require(elapsed < 1.0, "took " + fmt(elapsed, 2) + " s");
    if (o.pass) o.detail = "counts (" + counts + "), moe " + fmt(moe, 5) + ", " + fmt(elapsed, 3) + " s";
    return o;
}

// --- 2 ------------------------------------------------------------------------
Outcome statistics() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(2024);
    double worst_w = 0, worst_k = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng::uniform_below(gen, 12));
        std::vector<double> d;
        while (static_cast<int>(d.size()) < n) {
            const int v = static_cast<int>(rng::uniform_below(gen, 13)) - 6;
            if (v) d.push_back(v * 0.25);
        }
        worst_w = std::max(worst_w, std::fabs(evaluate::wilcoxon_exact_p(d) - oracle::wilcoxon_enumerated_p(d)));
    }
    o.require(worst_w <= kStatsTolerance, "Wilcoxon deviates by " + std::to_string(worst_w));
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> a(1 + rng::uniform_below(gen, 50)), b(1 + rng::uniform_below(gen, 50));
        for (auto& x : a) x = static_cast<double>(rng::uniform_below(gen, 8));
        for (auto& x : b) x = static_cast<double>(rng::uniform_below(gen, 8));
        o.require(evaluate::cliffs_delta(a, b).delta == oracle::cliffs_pairwise(a, b), "Cliff's delta mismatch");
    }
    for (int trial = 0; trial < 200; ++trial) {
        const auto k = 2 + rng::uniform_below(gen, 5);
        std::vector<std::vector<long long>> m(k, std::vector<long long>(k));
        for (auto& row : m)
            for (auto& c : row) c = static_cast<long long>(rng::uniform_below(gen, 25));
        m[0][k - 1] += 1;
        worst_k = std::max(worst_k, std::fabs(evaluate::kappa_from_confusion(m) - oracle::kappa_closed_form(m)));
    }
    o.require(worst_k <= kStatsTolerance, "kappa deviates by " + std::to_string(worst_k));
    const double alpha = evaluate::bonferroni(0.05, 6);
    o.require(std::fabs(alpha - 0.05 / 6.0) <= 1e-15, "bonferroni " + fmt(alpha, 6));
    const double elapsed = seconds_since(t0);
    o.require(elapsed < 30.0, "took " + fmt(elapsed, 2) + " s");
    if (o.pass)
        o.detail = "1000 Wilcoxon, 300 Cliff, 200 kappa cases; max dev " + fmt(std::max(worst_w, worst_k), 16) +
                   "; alpha " + fmt(alpha, 6) + "; " + fmt(elapsed, 2) + " s";
    return o;
}

// --- 3 ------------------------------------------------------------------------
Outcome similarity() {
    Outcome o;
    std::mt19937_64 gen(77);
    const std::vector<std::string> vocab{"creeper", "Explodes", "near", "door", "the", "player",
                                         "chunk",   "crash",    "1.21", "world", "a", "hopper"};
    auto doc = [&] {
        std::string s;
        for (auto n = rng::uniform_below(gen, 10); n > 0; --n) s += vocab[rng::uniform_below(gen, vocab.size())] + " ";
        return s;
    };
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        std::vector<std::string> corpus(2 + rng::uniform_below(gen, 4));
        for (auto& d : corpus) d = doc();
        worst = std::max(worst, std::fabs(evaluate::tfidf_cosine(corpus[0], corpus[1], corpus) -
                                          oracle::tfidf_cosine(corpus[0], corpus[1], corpus)));
    }
    o.require(worst <= kTfIdfTolerance, "TF-IDF deviates by " + std::to_string(worst));

    const evaluate::WordVectors table(2, {{"red", {1.0, 0.0}}, {"blue", {0.0, 1.0}}});
    o.require(evaluate::embedding_cosine("red", "red", table) == 1.0, "identical word is not 1.0");
    o.require(std::fabs(evaluate::embedding_cosine("red blue", "red", table) - 1.0 / std::sqrt(2.0)) <= 1e-15,
              "two-word case is not 1/sqrt(2)");

    std::unordered_map<std::string, std::vector<double>> vectors;
    std::normal_distribution<double> nd;
    for (const auto& w : vocab) vectors[text::to_lower(w)] = {nd(gen), nd(gen), nd(gen), nd(gen)};
    const evaluate::WordVectors random_table(4, vectors);
    for (int t = 0; t < 500; ++t) {
        const auto a = doc(), b = doc();
        std::vector<std::string> corpus{a, b, doc()};
        const double tf = evaluate::tfidf_cosine(a, b, corpus);
        const double em = evaluate::embedding_cosine(a, b, random_table);
        o.require(tf >= 0.0 && tf <= 1.0 + 1e-12, "TF-IDF out of bounds");
        o.require(em >= -1.0 - 1e-12 && em <= 1.0 + 1e-12, "embedding cosine out of bounds");
        o.require(tf == evaluate::tfidf_cosine(b, a, corpus), "TF-IDF not symmetric");
        o.require(em == evaluate::embedding_cosine(b, a, random_table), "embedding cosine not symmetric");
    }
    if (o.pass) o.detail = "100 corpora, max dev " + fmt(worst, 12) + "; hand cases exact; 500 fuzzed pairs";
    return o;
}

// --- 4 ------------------------------------------------------------------------
Outcome retrieval() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto index = testkit::synthetic_index();
    const auto& catalog = testkit::shipped_catalog();
    auto cfg = testkit::fixture_config().gateway_config();
    cfg.cache_path = scratch() / "retrieval_cache.jsonl";
    cfg.rerank_mode = provider::RerankMode::Remote;
    const std::vector<std::pair<std::string, std::string>> reports{
        {"Hopper stops moving items", "A redstone hopper chain stops after the chunk reloads."},
        {"Creeper ignores elytra players", "Creepers do not explode near a player gliding with an elytra."},
        {"Villager loses trades", "The librarian villager resets its trades after the lectern is broken."}};
    {
        auto record = cfg;
        record.mode = provider::Mode::Record;
        provider::Gateway g(record, std::make_unique<testkit::FixtureModel>(testkit::kSyntheticDim));
        for (const auto& [s, d] : reports) rag::retrieve(index, s, d, g, catalog);
    }
    std::vector<std::vector<rag::RetrievalResult>> runs;
    for (int run = 0; run < 5; ++run) {
        provider::Gateway g(cfg);
        std::vector<rag::RetrievalResult> results;
        for (const auto& [s, d] : reports) results.push_back(rag::retrieve(index, s, d, g, catalog));
        runs.push_back(results);
        o.require(g.count_calls("chat") + g.count_calls("embed") + g.count_calls("rerank") > 0, "no provider calls");
        for (const auto& c : g.call_log()) o.require(c.cache_hit, "replay missed the cache");
    }
    for (const auto& r : runs.front()) {
        std::vector<std::vector<double>> qv;
        for (const auto& q : r.queries) qv.push_back(testkit::hashed_embedding(q, testkit::kSyntheticDim));
        const auto expected = testkit::oracle_top_k(index, qv, 40);
        o.require(r.candidates.size() == 40, "pool is not 40");
        for (std::size_t i = 0; i < std::min<std::size_t>(40, r.candidates.size()); ++i)
            o.require(r.candidates[i].index == expected[i], "candidate " + std::to_string(i) + " differs from oracle");
        o.require(r.selected.size() == 15, "selected is not 15");
        std::set<std::string> pool;
        for (const auto& c : r.candidates) pool.insert(c.chunk_id);
        for (std::size_t i = 0; i < r.selected.size(); ++i) {
            o.require(pool.count(r.selected[i].chunk_id) == 1, "selected chunk outside the candidates");
            if (i) o.require(r.selected[i - 1].rerank_score >= r.selected[i].rerank_score, "scores increase");
        }
    }
    for (const auto& run : runs) o.require(run == runs.front(), "replay runs differ");
    const double elapsed = seconds_since(t0);
    o.require(elapsed < 5.0, "took " + fmt(elapsed, 2) + " s");
    if (o.pass) o.detail = "3 reports x 5 replays, top-40 = oracle, 15 selected, " + fmt(elapsed, 2) + " s";
    return o;
}

// --- 5 ------------------------------------------------------------------------
Outcome preprocessing() {
    Outcome o;
    const auto raws = testkit::fixture_reports();
    auto gateway = testkit::replay_gateway();
    const auto& rules = preprocess::RuleSet::builtin();
    std::map<std::string, Json> expected;
    for (const auto& e : jsonl::read_lines(testkit::fixture_path("preprocess_expectations.jsonl")))
        expected[e["key"]] = e["expected_sections"];
    o.require(raws.size() >= 30, "only " + std::to_string(raws.size()) + " fixtures");
    std::size_t verbatim = 0;
    for (const auto& raw : raws) {
        const auto cleaned = preprocess::clean_text(raw.description);
        const auto source = preprocess::clean_text(raw.summary + "\n" + raw.description).text;
        const auto meta = preprocess::metadata_block(raw);
        for (auto* gw : {static_cast<provider::Gateway*>(nullptr), gateway.get()}) {
            const auto r = preprocess::preprocess_report(raw, gw, gw ? &testkit::shipped_catalog() : nullptr, rules);
            o.require(r.report.sections.size() == 4, raw.key + ": missing section keys");
            o.require(validate_structured_report(r.report, ReportOrigin::Preprocessor).empty(),
                      raw.key + ": invalid report");
            for (const auto& [kind, s] : r.report.sections) {
                if (s.provenance != Provenance::LlmExtracted && s.provenance != Provenance::HeaderMatched &&
                    s.provenance != Provenance::HeuristicClassified)
                    continue;
                std::string content = s.content;
                if (!meta.empty() && content.size() >= meta.size() &&
                    content.compare(content.size() - meta.size(), meta.size(), meta) == 0)
                    content.resize(content.size() - meta.size());
                o.require(text::token_overlap(content, source) >= kPreserveOverlap,
                          raw.key + " " + std::string(to_string(kind)) + ": content not from source");
            }
        }
        const auto extracted = preprocess::llm_extract_sections(raw.key, raw.summary, cleaned, *gateway,
                                                                testkit::shipped_catalog());
        const auto fallback = preprocess::heuristic_extract_sections(raw.summary, cleaned, extracted, rules);
        for (auto k : kAllSections)
            if (!extracted.section(k).empty())
                o.require(fallback.section(k) == extracted.section(k), raw.key + ": fallback changed a section");
        if (auto it = expected.find(raw.key); it != expected.end()) {
            const auto r = preprocess::preprocess_report(raw, nullptr, nullptr, rules);
            for (const auto& [name, content] : it->second.items())
                o.require(r.report.section(*parse_section_kind(name)).content == content.get<std::string>(),
                          raw.key + " " + name + ": header section not verbatim");
            ++verbatim;
        }
    }
    if (o.pass)
        o.detail = std::to_string(raws.size()) + " fixtures, both extraction paths; " + std::to_string(verbatim) +
                   " header fixtures verbatim";
    return o;
}

// --- 6 ------------------------------------------------------------------------
Outcome gating() {
    Outcome o;
    const auto config = testkit::fixture_config();
    const auto model = detect::ClassifierModel::load(config.detect.model_path);
    auto gateway = testkit::replay_gateway();
    std::size_t invoked = 0, quiet_complete = 0;
    for (const auto& raw : testkit::fixture_reports()) {
        const auto pre = preprocess::preprocess_report(raw, gateway.get(), &testkit::shipped_catalog(),
                                                       preprocess::RuleSet::builtin());
        const auto input = detect::classifier_text(raw.summary, raw.description);
        const double score = detect::classify(model, input);
        const bool heuristic = !detect::heuristic_check(pre.report).empty();
        gateway->clear_call_log();
        const auto r = detect::detect_report(pre.report, input, model, *gateway, testkit::shipped_catalog());
        const auto calls = gateway->call_log().size();
        const bool expected = score >= model.threshold || heuristic;
        o.require(r.llm_invoked == expected, raw.key + ": llm_invoked disagrees with the gate");
        o.require(calls == (expected ? 1u : 0u), raw.key + ": call log has " + std::to_string(calls) + " calls");
        for (const auto& c : gateway->call_log()) o.require(c.cache_hit, raw.key + ": analyzer call not recorded");
        invoked += r.llm_invoked;
        if (!heuristic && score < model.threshold) {
            ++quiet_complete;
            o.require(calls == 0, raw.key + ": complete low-score report reached the provider");
        }
    }
    o.require(quiet_complete > 0, "no structurally complete low-score fixture");
    if (o.pass)
        o.detail = std::to_string(invoked) + " analyzed, " + std::to_string(quiet_complete) +
                   " complete low-score reports with zero calls";
    return o;
}

// --- 7, 8, 9 share the replay pipeline runs -----------------------------------
struct PipelineRuns {
    bool ok = false;
    double seconds = 0;
    std::size_t reports = 0;
    fs::path a, b;
};

const PipelineRuns& pipeline_runs() {
    static const PipelineRuns runs = [] {
        PipelineRuns r;
        r.a = scratch() / "run_a";
        r.b = scratch() / "run_b";
        const auto t0 = std::chrono::steady_clock::now();
        r.ok = run_pipeline(r.a);
        r.seconds = seconds_since(t0);
        r.ok = r.ok && run_pipeline(r.b);
        if (r.ok) r.reports = jsonl::read_lines(app::Workspace{r.a}.raw_corpus()).size();
        return r;
    }();
    return runs;
}

Outcome completeness() {
    Outcome o;
    const auto& runs = pipeline_runs();
    o.require(runs.ok, "replay pipeline failed");
    if (!runs.ok) return o;
    const auto j = Json::parse(jsonl::read_file(app::Workspace{runs.a}.evaluation_dir() / "completeness.json"));
    const double raw = j["raw"]["complete"], improved = j["improved"]["complete"];
    o.require(raw <= kRawCompletenessMax, "raw completeness " + fmt(raw));
    o.require(improved >= kImprovedCompletenessMin, "improved completeness " + fmt(improved));
    o.detail = "raw " + fmt(100 * raw, 1) + "% -> improved " + fmt(100 * improved, 1) + "% over " +
               std::to_string(runs.reports) + " reports" + (o.pass ? "" : "; " + o.detail);
    return o;
}

Outcome ablation() {
    Outcome o;
    const auto& runs = pipeline_runs();
    o.require(runs.ok, "replay pipeline failed");
    if (!runs.ok) return o;
    const provider::ReplayCache cache(testkit::fixture_config().provider.cache_path);
    std::size_t prompts = 0;
    for (const auto& v : app::ablation_variants()) {
        const auto reports =
            jsonl::read<improve::ImprovedReport>(app::Workspace{runs.a}.ablation_dir() / v.name / "reports.jsonl");
        std::size_t with_knowledge = 0;
        for (const auto& r : reports)
            for (const auto& rec : r.records) {
                if (rec.request_hash.empty()) continue;
                const auto entry = cache.find(rec.request_hash);
                o.require(entry.has_value(), v.name + ": prompt not in the replay cache");
                if (!entry) continue;
                ++prompts;
                const auto user = entry->request.value("user_text", "");
                const auto system = entry->request.value("system_text", "");
                const bool knowledge = user.find(improve::kKnowledgeHeader) != std::string::npos;
                with_knowledge += knowledge;
                if (!v.ablation.rag) o.require(!knowledge, v.name + ": knowledge block without RAG");
                o.require((user.find(improve::kFindingsHeader) != std::string::npos) == v.ablation.detector,
                          v.name + ": detector findings do not follow the switch");
                o.require((system.find(improve::kFewShotHeader) != std::string::npos) == v.ablation.few_shot,
                          v.name + ": few-shot pairs do not follow the switch");
                o.require(rec.ablation_config == v.ablation, v.name + ": record carries the wrong ablation");
            }
        // Every prompt of a RAG-enabled variant carries knowledge when retrieval returned any.
        if (v.ablation.rag) o.require(with_knowledge > 0, v.name + ": no knowledge blocks although RAG is on");
    }
    if (o.pass) o.detail = std::to_string(prompts) + " prompts recovered from the cache across 4 variants";
    return o;
}

Outcome determinism() {
    Outcome o;
    const auto& runs = pipeline_runs();
    o.require(runs.ok, "replay pipeline failed");
    if (!runs.ok) return o;
    const auto a = tree(runs.a), b = tree(runs.b);
    o.require(a.size() == b.size(), "different file sets");
    for (const auto& [path, contents] : a) {
        auto it = b.find(path);
        o.require(it != b.end() && it->second == contents, path + " differs");
    }
    const double per_report = runs.seconds / static_cast<double>(std::max<std::size_t>(1, runs.reports));
    o.require(per_report < 1.0, "overhead " + fmt(per_report, 3) + " s/report");
    if (o.pass)
        o.detail = std::to_string(a.size()) + " files identical; " + fmt(per_report * 1000, 2) +
                   " ms/report pipeline overhead";
    return o;
}

// --- 10 -----------------------------------------------------------------------
Outcome study() {
    Outcome o;
    const auto triples = jsonl::read<evaluate::StudyTriple>(testkit::fixture_path("study_triples.jsonl"));
    const auto table = evaluate::WordVectors::load(testkit::fixture_path("word_vectors.txt"));
    const auto report = evaluate::run_similarity_study(triples, table);
    o.require(report.triples == 10, "expected 10 triples");
    o.require(report.tests.size() == 6, std::to_string(report.tests.size()) + " tests");
    o.require(fmt(report.corrected_alpha, 4) == "0.0083", "alpha " + fmt(report.corrected_alpha, 6));
    std::set<std::pair<int, int>> cells;
    for (const auto& t : report.tests) {
        cells.insert({static_cast<int>(*t.component), static_cast<int>(t.metric)});
        o.require(t.mean_raw < t.mean_a && t.mean_raw < t.mean_b, "raw not below improved");
        o.require(t.significant == (t.p_value <= t.corrected_alpha), "significance flag inconsistent");
    }
    for (const auto& t : report.averages) o.require(t.mean_raw < t.mean_a && t.mean_raw < t.mean_b, "Avg. raw");
    o.require(cells.size() == 6, "tests do not cover 3 components x 2 metrics");
    o.require(evaluate::format_study_table(report).find("Avg.") != std::string::npos, "table lacks Avg. rows");
    if (o.pass) o.detail = "6 tests, alpha " + fmt(report.corrected_alpha, 4) + ", raw < both improved everywhere";
    return o;
}

}  // namespace

int main() {
    fs::remove_all(scratch());
    fs::create_directories(scratch());
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"sampling exactness", sampling},
        {"statistics oracle suite", statistics},
        {"similarity oracle suite", similarity},
        {"retrieval funnel contract", retrieval},
        {"preprocessor fixture suite", preprocessing},
        {"detection gating", gating},
        {"completeness mirror", completeness},
        {"ablation faithfulness", ablation},
        {"end-to-end determinism", determinism},
        {"similarity study shape", study},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += !o.pass;
        std::cout << "criterion " << (i + 1) << " [" << criteria[i].first << "]: " << (o.pass ? "PASS" : "FAIL")
                  << " (" << o.detail << ")" << std::endl;
    }
    fs::remove_all(scratch());
    return failures == 0 ? 0 : 1;
}
