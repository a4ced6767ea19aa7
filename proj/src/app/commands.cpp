#include "brqual/app/commands.hpp"

#include "brqual/app/pipeline.hpp"
#include "brqual/core/error.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/detect/classifier.hpp"
#include "brqual/evaluate/completeness.hpp"
#include "brqual/evaluate/kappa.hpp"
#include "brqual/evaluate/study.hpp"
#include "brqual/ingest/sampling.hpp"
#include "brqual/ingest/tracker.hpp"
#include "brqual/preprocess/rules.hpp"
#include "brqual/rag/index.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>

namespace brqual::app {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// One summary line per command: JSON with --json, text otherwise.
void summarize(CommandContext& ctx, const std::string& command, Json fields, const std::string& text,
               Clock::time_point start) {
    const double elapsed = seconds_since(start);
    if (ctx.options.json) {
        fields["command"] = command;
        fields["elapsed_s"] = elapsed;
        if (ctx.options.dry_run) fields["dry_run"] = true;
        ctx.out << fields.dump() << '\n';
    } else {
        ctx.out << command << (ctx.options.dry_run ? " (dry run)" : "") << ": " << text << " [" << fixed(elapsed, 2)
                << " s]\n";
    }
}

void print_block(CommandContext& ctx, const std::string& text) {
    if (!ctx.options.json) ctx.out << text;
}

std::unique_ptr<provider::Gateway> make_gateway(CommandContext& ctx) {
    std::unique_ptr<provider::Backend> backend;
    if (ctx.hooks.backend) backend = ctx.hooks.backend(ctx.config);
    auto env = ctx.env();
    return std::make_unique<provider::Gateway>(ctx.config.gateway_config(), std::move(backend),
                                               [env] { return pipeline_now(env); });
}

Json provider_stats(const provider::Gateway& gateway) {
    std::size_t hits = 0;
    const auto log = gateway.call_log();
    for (const auto& c : log) hits += c.cache_hit;
    return Json{{"provider_calls", log.size()}, {"cache_hits", hits}};
}

std::string provider_text(const provider::Gateway& gateway) {
    const auto stats = provider_stats(gateway);
    return std::to_string(stats["provider_calls"].get<std::size_t>()) + " provider calls (" +
           std::to_string(stats["cache_hits"].get<std::size_t>()) + " cached)";
}

improve::PromptCatalog load_catalog(const PipelineConfig& c) {
    const fs::path dir = c.improve.catalog_path.empty() ? fs::path(BRQUAL_DATA_DIR) / "prompts" : c.improve.catalog_path;
    if (!fs::is_directory(dir)) throw ConfigError("prompt catalog directory not found: " + dir.string());
    return improve::PromptCatalog::load(dir);
}

preprocess::RuleSet load_rules(const PipelineConfig& c) {
    if (c.preprocess.rules_path.empty()) return preprocess::RuleSet::builtin();
    return preprocess::RuleSet::load(c.preprocess.rules_path);
}

std::vector<RawBugReport> read_raw(const Workspace& ws) {
    require_artifact(ws.raw_corpus(), "fetch");
    return jsonl::read<RawBugReport>(ws.raw_corpus());
}

std::vector<StructuredReport> read_preprocessed(const Workspace& ws) {
    require_artifact(ws.preprocessed(), "preprocess");
    return jsonl::read<StructuredReport>(ws.preprocessed());
}

std::vector<DetectionResult> read_detections(const Workspace& ws) {
    require_artifact(ws.detections(), "detect");
    return jsonl::read<DetectionResult>(ws.detections());
}

detect::ClassifierModel read_model(const PipelineConfig& c) {
    require_artifact(c.detect.model_path, "train-detector");
    auto model = detect::ClassifierModel::load(c.detect.model_path);
    if (c.detect.threshold) model.threshold = *c.detect.threshold;
    return model;
}

rag::VectorIndex read_index(const PipelineConfig& c) {
    require_artifact(c.rag.index_dir / "index.json", "build-kb");
    return rag::VectorIndex::load(c.rag.index_dir);
}

improve::ImproveConfig improve_config(const PipelineConfig& c) {
    improve::ImproveConfig ic;
    ic.retrieval.pool_size = c.rag.pool_size;
    ic.retrieval.keep = c.rag.keep;
    ic.token_budget = c.improve.token_budget;
    return ic;
}

/// Sections the improver will touch, for plans and dry runs.
std::size_t planned_sections(const std::vector<DetectionResult>& detections, const improve::Ablation& ablation) {
    std::size_t n = 0;
    for (const auto& d : detections) {
        if (!ablation.detector) {
            n += kRequiredSections.size();
            continue;
        }
        for (auto kind : kRequiredSections) {
            n += std::any_of(d.flags.begin(), d.flags.end(), [&](const IssueFlag& f) { return f.section == kind; });
        }
    }
    return n;
}

struct ImproveTally {
    std::size_t reports = 0;
    std::size_t touched = 0;
    std::size_t sections = 0;
    std::size_t failed = 0;
    std::size_t knowledge_refs = 0;
};

ImproveTally tally(const std::vector<improve::ImprovedReport>& improved) {
    ImproveTally t;
    t.reports = improved.size();
    for (const auto& r : improved) {
        t.touched += !r.records.empty();
        for (const auto& rec : r.records) {
            ++t.sections;
            t.failed += !rec.success;
            t.knowledge_refs += rec.retrieved_chunk_ids.size();
        }
    }
    return t;
}

std::string rate(double v) { return fixed(100.0 * v, 1) + "%"; }

}  // namespace

// --- commands -----------------------------------------------------------------

int cmd_fetch(CommandContext& ctx) {
    const auto start = Clock::now();
    const auto& c = ctx.config;
    ingest::FetchQuery query;
    query.project_key = c.tracker.project_key;
    if (!c.tracker.created_after.empty()) query.created_after = parse_timestamp(c.tracker.created_after);
    query.max_results = c.tracker.max_results;
    query.page_size = c.tracker.page_size;

    std::unique_ptr<ingest::TrackerSource> source;
    std::string source_name;
    if (!c.tracker.fixtures_dir.empty()) {
        source = std::make_unique<ingest::FixtureTracker>(c.tracker.fixtures_dir);
        source_name = c.tracker.fixtures_dir.string();
    } else if (c.provider.mode == provider::Mode::Replay) {
        throw ConfigError("live tracker fetch is disabled in replay mode; set tracker.fixtures_dir or change provider.mode");
    } else {
        source = std::make_unique<ingest::JiraClient>(c.tracker.base_url, c.tracker.parallelism);
        source_name = c.tracker.base_url;
    }
    if (ctx.options.dry_run) {
        summarize(ctx, "fetch", {{"source", source_name}, {"jql", ingest::build_jql(query)}},
                  "would query " + source_name + " with " + ingest::build_jql(query), start);
        return kOk;
    }
    const auto reports = ingest::fetch_reports(*source, query);
    const Workspace ws{c.work_dir};
    jsonl::write(ws.raw_corpus(), reports);
    std::map<std::string, std::size_t> strata;
    for (const auto& r : reports) ++strata[ingest::stratum_of(r)];
    summarize(ctx, "fetch", {{"reports", reports.size()}, {"strata", strata}, {"output", ws.raw_corpus().string()}},
              std::to_string(reports.size()) + " reports in " + std::to_string(strata.size()) + " strata -> " +
                  ws.raw_corpus().string(),
              start);
    return kOk;
}

int cmd_sample(CommandContext& ctx) {
    const auto start = Clock::now();
    const auto& c = ctx.config;
    const Workspace ws{c.work_dir};
    const auto population = read_raw(ws);
    if (population.empty()) throw ArtifactError(ws.raw_corpus().string() + " is empty");
    const std::size_t total = std::min(c.sample.total, population.size());
    if (ctx.options.dry_run) {
        summarize(ctx, "sample", {{"population", population.size()}, {"total", total}, {"seed", c.sample.seed}},
                  "would draw " + std::to_string(total) + " of " + std::to_string(population.size()) + " reports", start);
        return kOk;
    }
    auto sample = ingest::stratified_sample(population, total, c.sample.seed);
    ingest::write_sample_manifest(ws.sample_manifest(), sample);
    auto selected = sample.reports;
    if (c.sample.target_only) selected = ingest::filter_target_resolutions(selected);
    jsonl::write(ws.sample_corpus(), selected);

    std::string table;
    char line[128];
    std::snprintf(line, sizeof line, "%-28s %10s %8s\n", "Resolution", "Population", "Sample");
    table += line;
    for (const auto& s : sample.table) {
        std::snprintf(line, sizeof line, "%-28s %10zu %8zu\n", s.resolution_name.c_str(), s.population_count,
                      s.sample_count);
        table += line;
    }
    const double moe = total < population.size() ? ingest::margin_of_error(population.size(), total, 0.5, 1.96) : 0.0;
    std::snprintf(line, sizeof line, "%-28s %10zu %8zu  (margin of error %.2f%% at 95%%)\n", "Total", population.size(),
                  total, 100.0 * moe);
    table += line;
    print_block(ctx, table);
    Json fields{{"population", population.size()},
                {"sampled", sample.reports.size()},
                {"kept", selected.size()},
                {"seed", c.sample.seed},
                {"margin_of_error", moe},
                {"strata", sample.table}};
    std::string text = std::to_string(sample.reports.size()) + " sampled";
    if (total < c.sample.total) text += " (capped at population size)";
    text += ", " + std::to_string(selected.size()) + " kept -> " + ws.sample_corpus().string();
    summarize(ctx, "sample", fields, text, start);
    return kOk;
}

int cmd_preprocess(CommandContext& ctx, const PreprocessArgs& args) {
    const auto start = Clock::now();
    const auto& c = ctx.config;
    const Workspace ws{c.work_dir};
    const fs::path input = args.from_sample ? ws.sample_corpus() : ws.raw_corpus();
    require_artifact(input, args.from_sample ? "sample" : "fetch");
    const auto raws = jsonl::read<RawBugReport>(input);
    const auto rules = load_rules(c);
    const auto catalog = load_catalog(c);
    if (ctx.options.dry_run) {
        const std::size_t calls = c.preprocess.use_llm ? raws.size() : 0;
        summarize(ctx, "preprocess", {{"reports", raws.size()}, {"max_provider_calls", calls}},
                  std::to_string(raws.size()) + " reports, at most " + std::to_string(calls) + " extraction calls",
                  start);
        return kOk;
    }
    std::unique_ptr<provider::Gateway> gateway;
    if (c.preprocess.use_llm) gateway = make_gateway(ctx);
    Timed timing;
    const auto results = preprocess_corpus(raws, gateway.get(), &catalog, rules, c.worker_count(), &timing);

    std::vector<StructuredReport> reports;
    std::vector<Json> warnings;
    std::map<std::string, std::size_t> provenance;
    for (const auto& r : results) {
        reports.push_back(r.report);
        if (!r.warnings.empty()) warnings.push_back(Json{{"key", r.report.key}, {"warnings", r.warnings}});
        for (const auto& [kind, section] : r.report.sections) ++provenance[std::string(to_string(section.provenance))];
    }
    jsonl::write(ws.preprocessed(), reports);
    jsonl::write_lines(ws.preprocess_warnings(), warnings);

    Json fields{{"reports", reports.size()},
                {"reports_with_warnings", warnings.size()},
                {"provenance", provenance},
                {"ms_per_report", timing.per_item_ms()}};
    std::string text = std::to_string(reports.size()) + " reports, " + std::to_string(warnings.size()) +
                       " with warnings, " + fixed(timing.per_item_ms(), 1) + " ms/report";
    if (gateway) {
        fields.update(provider_stats(*gateway));
        text += ", " + provider_text(*gateway);
    }
    summarize(ctx, "preprocess", fields, text, start);
    return kOk;
}

int cmd_detect(CommandContext& ctx) {
    const auto start = Clock::now();
    const auto& c = ctx.config;
    const Workspace ws{c.work_dir};
    const auto reports = read_preprocessed(ws);
    const auto raws = read_raw(ws);
    const auto model = read_model(c);
    const auto catalog = load_catalog(c);
    if (ctx.options.dry_run) {
        summarize(ctx, "detect", {{"reports", reports.size()}, {"max_provider_calls", reports.size()}},
                  std::to_string(reports.size()) + " reports, at most " + std::to_string(reports.size()) +
                      " analyzer calls",
                  start);
        return kOk;
    }
    auto gateway = make_gateway(ctx);
    Timed timing;
    const auto results = detect_corpus(reports, raws, model, *gateway, catalog, c.worker_count(), &timing);
    jsonl::write(ws.detections(), results);

    std::size_t failing = 0;
    std::size_t analyzed = 0;
    for (const auto& d : results) {
        failing += d.verdict == Verdict::Fail;
        analyzed += d.llm_invoked;
    }
    Json fields{{"reports", results.size()},
                {"fail", failing},
                {"pass", results.size() - failing},
                {"analyzer_invocations", analyzed},
                {"ms_per_report", timing.per_item_ms()}};
    fields.update(provider_stats(*gateway));
    summarize(ctx, "detect", fields,
              std::to_string(results.size()) + " reports, " + std::to_string(failing) + " fail, " +
                  std::to_string(analyzed) + " analyzed, " + fixed(timing.per_item_ms(), 1) + " ms/report, " +
                  provider_text(*gateway),
              start);
    return kOk;
}

int cmd_improve(CommandContext& ctx, const ImproveArgs& args) {
    const auto start = Clock::now();
    const auto& c = ctx.config;
    const Workspace ws{c.work_dir};
    const auto reports = read_preprocessed(ws);
    const auto detections = read_detections(ws);
    const auto raws = read_raw(ws);
    const auto catalog = load_catalog(c);
    std::optional<rag::VectorIndex> index;
    if (args.ablation.rag) index = read_index(c);
    if (ctx.options.dry_run) {
        const auto sections = planned_sections(detections, args.ablation);
        summarize(ctx, "improve", {{"reports", reports.size()}, {"planned_sections", sections}},
                  std::to_string(reports.size()) + " reports, " + std::to_string(sections) +
                      " sections to improve (one generation call each, plus retrieval per report when RAG is on)",
                  start);
        return kOk;
    }
    auto gateway = make_gateway(ctx);
    Timed timing;
    const auto improved = improve_corpus(reports, raws, detections, *gateway, catalog, index ? &*index : nullptr,
                                         args.ablation, improve_config(c), c.worker_count(), &timing);
    jsonl::write(ws.improved(), improved);
    const auto t = tally(improved);
    Json fields{{"reports", t.reports},
                {"reports_touched", t.touched},
                {"sections_improved", t.sections - t.failed},
                {"sections_failed", t.failed},
                {"ablation", args.ablation},
                {"ms_per_report", timing.per_item_ms()}};
    fields.update(provider_stats(*gateway));
    summarize(ctx, "improve", fields,
              std::to_string(t.reports) + " reports, " + std::to_string(t.sections - t.failed) +
                  " sections improved, " + std::to_string(t.failed) + " failed, " + fixed(timing.per_item_ms(), 1) +
                  " ms/report, " + provider_text(*gateway),
              start);
    return kOk;
}

int cmd_evaluate(CommandContext& ctx) {
    const auto start = Clock::now();
    const auto& c = ctx.config;
    const Workspace ws{c.work_dir};
    const auto raw = read_preprocessed(ws);
    require_artifact(ws.improved(), "improve");
    const auto improved = jsonl::read<improve::ImprovedReport>(ws.improved());
    const bool study = !c.eval.triples_path.empty();
    const bool kappa = !c.eval.annotations_path.empty();
    if (study) {
        require_artifact(c.eval.triples_path, "evaluate (eval.triples_path)");
        if (c.eval.embeddings_path.empty()) throw ConfigError("eval.embeddings_path is required for the similarity study");
        require_artifact(c.eval.embeddings_path, "evaluate (eval.embeddings_path)");
    }
    if (kappa) require_artifact(c.eval.annotations_path, "evaluate (eval.annotations_path)");
    if (ctx.options.dry_run) {
        summarize(ctx, "evaluate", {{"raw", raw.size()}, {"improved", improved.size()}, {"study", study}, {"kappa", kappa}},
                  std::to_string(raw.size()) + " raw and " + std::to_string(improved.size()) +
                      " improved reports; similarity study " + (study ? "on" : "off") + ", kappa " +
                      (kappa ? "on" : "off"),
                  start);
        return kOk;
    }
    const auto dir = ws.evaluation_dir();
    const auto comparison = compare_completeness(raw, improved);
    const auto table = evaluate::format_completeness_table(comparison.raw_rates, comparison.improved_rates);
    jsonl::write_file(dir / "completeness.txt", table);
    jsonl::write_file(dir / "completeness.json", Json{{"raw", comparison.raw_rates},
                                                      {"improved", comparison.improved_rates},
                                                      {"raw_reports", comparison.raw},
                                                      {"improved_reports", comparison.improved}}
                                                         .dump(2) +
                                                     "\n");
    print_block(ctx, table);
    Json fields{{"raw_complete", comparison.raw_rates.complete},
                {"improved_complete", comparison.improved_rates.complete}};
    std::string text = "complete " + rate(comparison.raw_rates.complete) + " -> " +
                       rate(comparison.improved_rates.complete);

    if (study) {
        const auto triples = jsonl::read<evaluate::StudyTriple>(c.eval.triples_path);
        const auto vectors = evaluate::WordVectors::load(c.eval.embeddings_path);
        evaluate::StudyOptions options;
        options.alpha = c.eval.alpha;
        options.workers = c.worker_count();
        const auto report = evaluate::run_similarity_study(triples, vectors, options);
        const auto study_table = evaluate::format_study_table(report);
        jsonl::write_file(dir / "similarity.txt", study_table);
        jsonl::write_file(dir / "similarity.json", Json(report).dump(2) + "\n");
        print_block(ctx, "\n" + study_table);
        fields["similarity_tests"] = report.tests.size();
        fields["corrected_alpha"] = report.corrected_alpha;
        text += ", " + std::to_string(report.tests.size()) + " similarity tests";
    }
    if (kappa) {
        const auto labels = jsonl::read<evaluate::ManualLabel>(c.eval.annotations_path);
        Json out = Json::object();
        std::string kappa_table;
        char line[128];
        std::snprintf(line, sizeof line, "%-9s %-5s %8s %10s\n", "Version", "Label", "kappa", "agreement");
        kappa_table += line;
        for (auto version : {evaluate::ReportVersion::Raw, evaluate::ReportVersion::Improved}) {
            const bool present = std::any_of(labels.begin(), labels.end(), [&](const auto& l) { return l.version == version; });
            if (!present) continue;
            const auto results = evaluate::kappa_study(labels, version);
            out[std::string(evaluate::to_string(version))] = results;
            for (const auto& k : results) {
                std::snprintf(line, sizeof line, "%-9s %-5s %8.3f %9.1f%%\n",
                              std::string(evaluate::to_string(version)).c_str(),
                              std::string(evaluate::to_string(k.label_type)).c_str(), k.kappa,
                              100.0 * k.observed_agreement);
                kappa_table += line;
            }
        }
        jsonl::write_file(dir / "kappa.txt", kappa_table);
        jsonl::write_file(dir / "kappa.json", out.dump(2) + "\n");
        print_block(ctx, "\n" + kappa_table);
        text += ", kappa computed";
    }
    summarize(ctx, "evaluate", fields, text + " -> " + dir.string(), start);
    return kOk;
}

int cmd_ablate(CommandContext& ctx) {
    const auto start = Clock::now();
    const auto& c = ctx.config;
    const Workspace ws{c.work_dir};
    const auto reports = read_preprocessed(ws);
    const auto detections = read_detections(ws);
    const auto raws = read_raw(ws);
    const auto catalog = load_catalog(c);
    const auto index = read_index(c);
    const auto& variants = ablation_variants();
    if (ctx.options.dry_run) {
        Json plan = Json::array();
        std::string text;
        for (const auto& v : variants) {
            const auto n = planned_sections(detections, v.ablation);
            plan.push_back(Json{{"variant", v.name}, {"planned_sections", n}});
            text += (text.empty() ? "" : ", ") + v.name + " " + std::to_string(n);
        }
        summarize(ctx, "ablate", {{"reports", reports.size()}, {"variants", plan}},
                  std::to_string(reports.size()) + " reports; sections per variant: " + text, start);
        return kOk;
    }
    auto gateway = make_gateway(ctx);
    std::string table;
    char line[192];
    std::snprintf(line, sizeof line, "%-12s %-4s %-8s %-8s %8s %8s %8s %10s %16s\n", "Variant", "RAG", "Detector",
                  "FewShot", "Sections", "Failed", "KB refs", "Complete", "Executable S2R");
    table += line;
    Json summary = Json::array();
    for (const auto& v : variants) {
        const auto improved = improve_corpus(reports, raws, detections, *gateway, catalog, v.ablation.rag ? &index : nullptr,
                                             v.ablation, improve_config(c), c.worker_count());
        jsonl::write(ws.ablation_dir() / v.name / "reports.jsonl", improved);
        const auto t = tally(improved);
        const auto rates = compare_completeness(reports, improved).improved_rates;
        auto yn = [](bool b) { return b ? "on" : "off"; };
        std::snprintf(line, sizeof line, "%-12s %-4s %-8s %-8s %8zu %8zu %8zu %9.1f%% %16s\n", v.name.c_str(),
                      yn(v.ablation.rag), yn(v.ablation.detector), yn(v.ablation.few_shot), t.sections, t.failed,
                      t.knowledge_refs, 100.0 * rates.complete, "(manual)");
        table += line;
        summary.push_back(Json{{"variant", v.name},
                               {"ablation", v.ablation},
                               {"sections", t.sections},
                               {"failed", t.failed},
                               {"knowledge_refs", t.knowledge_refs},
                               {"complete", rates.complete},
                               {"executable_s2r", nullptr}});
    }
    jsonl::write_file(ws.ablation_dir() / "summary.txt", table);
    jsonl::write_file(ws.ablation_dir() / "summary.json", summary.dump(2) + "\n");
    print_block(ctx, table);
    Json fields{{"variants", summary}};
    fields.update(provider_stats(*gateway));
    summarize(ctx, "ablate", fields,
              std::to_string(variants.size()) + " variants over " + std::to_string(reports.size()) + " reports, " +
                  provider_text(*gateway) + " -> " + ws.ablation_dir().string(),
              start);
    return kOk;
}

int cmd_train_detector(CommandContext& ctx) {
    const auto start = Clock::now();
    const auto& c = ctx.config;
    if (c.detect.labeled_path.empty()) throw ConfigError("detect.labeled_path is not set");
    require_artifact(c.detect.labeled_path, "train-detector (detect.labeled_path)");
    const auto examples = jsonl::read<detect::LabeledExample>(c.detect.labeled_path);
    detect::TrainingConfig training;
    training.seed = c.sample.seed;
    if (c.detect.threshold) training.threshold = *c.detect.threshold;
    if (ctx.options.dry_run) {
        summarize(ctx, "train-detector", {{"examples", examples.size()}},
                  std::to_string(examples.size()) + " labeled examples -> " + c.detect.model_path.string(), start);
        return kOk;
    }
    const auto model = detect::train_classifier(examples, training, pipeline_now(ctx.env()));
    model.save(c.detect.model_path);
    Json fields{{"examples", examples.size()},
                {"vocabulary", model.vocabulary.size()},
                {"validation_count", model.metadata.validation_count},
                {"validation_accuracy", model.metadata.validation_accuracy ? Json(*model.metadata.validation_accuracy)
                                                                            : Json(nullptr)},
                {"output", c.detect.model_path.string()}};
    std::string text = std::to_string(examples.size()) + " examples, vocabulary " +
                       std::to_string(model.vocabulary.size());
    if (model.metadata.validation_accuracy) {
        text += ", validation accuracy " + rate(*model.metadata.validation_accuracy);
    }
    summarize(ctx, "train-detector", fields, text + " -> " + c.detect.model_path.string(), start);
    return kOk;
}

int cmd_build_kb(CommandContext& ctx) {
    const auto start = Clock::now();
    const auto& c = ctx.config;
    if (c.rag.knowledge_path.empty()) throw ConfigError("rag.knowledge_path is not set");
    require_artifact(c.rag.knowledge_path, "build-kb (rag.knowledge_path)");
    const auto documents = rag::load_documents(c.rag.knowledge_path);
    std::size_t chunks = 0;
    for (const auto& d : documents) chunks += rag::chunk_spans(d.body, c.rag.chunk_size, c.rag.overlap).size();
    if (ctx.options.dry_run) {
        summarize(ctx, "build-kb", {{"documents", documents.size()}, {"chunks", chunks}},
                  std::to_string(documents.size()) + " documents, " + std::to_string(chunks) + " chunks to embed",
                  start);
        return kOk;
    }
    auto gateway = make_gateway(ctx);
    rag::IngestOptions options;
    options.chunk_size = c.rag.chunk_size;
    options.overlap = c.rag.overlap;
    options.built_at = format_timestamp(pipeline_now(ctx.env()));
    const auto result = rag::ingest_knowledge(documents, *gateway, options);
    result.index.save(c.rag.index_dir);
    for (const auto& w : result.warnings) ctx.err << "warning: " << w << '\n';
    Json fields{{"documents", documents.size()}, {"chunks", result.index.size()}, {"output", c.rag.index_dir.string()}};
    fields.update(provider_stats(*gateway));
    summarize(ctx, "build-kb", fields,
              std::to_string(documents.size()) + " documents, " + std::to_string(result.index.size()) + " chunks, " +
                  provider_text(*gateway) + " -> " + c.rag.index_dir.string(),
              start);
    return kOk;
}

// --- entry point --------------------------------------------------------------

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ProviderError*>(&e)) return kProviderFailure;
    if (dynamic_cast<const ArtifactError*>(&e) || dynamic_cast<const SchemaError*>(&e)) return kMissingArtifact;
    return kConfigFailure;
}

namespace {

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ProviderError*>(&e)) return "provider";
    if (dynamic_cast<const ArtifactError*>(&e)) return "artifact";
    if (dynamic_cast<const SchemaError*>(&e)) return "schema";
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    return "error";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks) {
    CLI::App app{"Bug report quality pipeline: fetch, sample, preprocess, detect, improve, evaluate.", "brqual"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> work_dir;
    GlobalOptions options;
    app.add_option("--config", config_path, "Configuration file (JSON); defaults to $BRQUAL_CONFIG");
    app.add_flag("--json", options.json, "Machine-readable output");
    app.add_option("--seed", seed, "Seed for sampling and training");
    app.add_flag("--dry-run", options.dry_run, "Print the plan without side effects");
    app.add_option("--work-dir", work_dir, "Artifact directory (paths.work_dir)");

    PreprocessArgs preprocess_args;
    ImproveArgs improve_args;
    bool no_rag = false;
    bool no_detector = false;
    bool no_fewshot = false;

    auto* fetch = app.add_subcommand("fetch", "Fetch reports from the tracker");
    auto* sample = app.add_subcommand("sample", "Stratified sample of the fetched corpus");
    auto* prep = app.add_subcommand("preprocess", "Extract S2R, OB, EB and environment sections");
    prep->add_flag("--from-sample", preprocess_args.from_sample, "Read the sampled corpus instead of the full one");
    auto* detect = app.add_subcommand("detect", "Flag low-quality sections");
    auto* improve = app.add_subcommand("improve", "Rewrite flagged sections");
    improve->add_flag("--no-rag", no_rag, "Disable knowledge retrieval");
    improve->add_flag("--no-detector", no_detector, "Ignore detector findings");
    improve->add_flag("--no-fewshot", no_fewshot, "Drop few-shot example pairs");
    auto* evaluate = app.add_subcommand("evaluate", "Completeness, similarity and agreement statistics");
    auto* ablate = app.add_subcommand("ablate", "Run improve under the four component ablations");
    auto* train = app.add_subcommand("train-detector", "Train the quality classifier");
    auto* build_kb = app.add_subcommand("build-kb", "Chunk and embed the knowledge base");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigFailure;
    }

    Json patch = Json::object();
    if (seed) patch["sample"]["seed"] = *seed;
    if (work_dir) patch["paths"]["work_dir"] = *work_dir;

    try {
        const auto env = hooks.env ? hooks.env : process_env();
        CommandContext ctx{load_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt, patch, env),
                           options, out, err, hooks};
        if (fetch->parsed()) return cmd_fetch(ctx);
        if (sample->parsed()) return cmd_sample(ctx);
        if (prep->parsed()) return cmd_preprocess(ctx, preprocess_args);
        if (detect->parsed()) return cmd_detect(ctx);
        if (improve->parsed()) {
            improve_args.ablation = {!no_rag, !no_detector, !no_fewshot};
            return cmd_improve(ctx, improve_args);
        }
        if (evaluate->parsed()) return cmd_evaluate(ctx);
        if (ablate->parsed()) return cmd_ablate(ctx);
        if (train->parsed()) return cmd_train_detector(ctx);
        if (build_kb->parsed()) return cmd_build_kb(ctx);
        return kConfigFailure;
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        if (options.json) {
            err << Json{{"error", error_kind(e)}, {"message", e.what()}, {"exit_code", code}}.dump() << '\n';
        } else {
            err << "brqual: " << e.what() << '\n';
        }
        return code;
    }
}

}  // namespace brqual::app
