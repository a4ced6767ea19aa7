#include "brqual/evaluate/completeness.hpp"

#include "brqual/core/text.hpp"

#include <cstdio>

namespace brqual::evaluate {

void to_json(Json& j, const CompletenessResult& c) {
    j = Json{{"key", c.key}, {"has_s2r", c.has_s2r}, {"has_ob", c.has_ob}, {"has_eb", c.has_eb}, {"complete", c.complete}};
}

void to_json(Json& j, const CompletenessRates& r) {
    j = Json{{"reports", r.reports}, {"s2r", r.s2r}, {"ob", r.ob}, {"eb", r.eb}, {"complete", r.complete}};
}

CompletenessResult check_completeness(const StructuredReport& report) {
    CompletenessResult r;
    r.key = report.key;
    r.has_s2r = text::is_substantive(report.section(SectionKind::StepsToReproduce).content);
    r.has_ob = text::is_substantive(report.section(SectionKind::ObservedBehavior).content);
    r.has_eb = text::is_substantive(report.section(SectionKind::ExpectedBehavior).content);
    r.complete = r.has_s2r && r.has_ob && r.has_eb;
    return r;
}

CompletenessRates completeness_rates(const std::vector<CompletenessResult>& results) {
    CompletenessRates r;
    r.reports = results.size();
    if (results.empty()) return r;
    for (const auto& c : results) {
        r.s2r += c.has_s2r;
        r.ob += c.has_ob;
        r.eb += c.has_eb;
        r.complete += c.complete;
    }
    const double n = static_cast<double>(results.size());
    r.s2r /= n;
    r.ob /= n;
    r.eb /= n;
    r.complete /= n;
    return r;
}

std::string format_completeness_table(const CompletenessRates& raw, const CompletenessRates& improved) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-26s %8s %10s %8s\n", "Element", "Raw", "Improved", "Imp.");
    out += line;
    auto row = [&](const char* name, double a, double b) {
        std::snprintf(line, sizeof line, "%-26s %7.1f%% %9.1f%% %+7.1f%%\n", name, 100 * a, 100 * b, 100 * (b - a));
        out += line;
    };
    row("Steps to Reproduce (S2R)", raw.s2r, improved.s2r);
    row("Observed Behavior (OB)", raw.ob, improved.ob);
    row("Expected Behavior (EB)", raw.eb, improved.eb);
    row("Complete Reports", raw.complete, improved.complete);
    return out;
}

}  // namespace brqual::evaluate
