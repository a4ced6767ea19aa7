#pragma once

#include "brqual/core/json.hpp"
#include "brqual/core/model.hpp"

#include <string>
#include <vector>

namespace brqual::evaluate {

struct CompletenessResult {
    std::string key;
    bool has_s2r = false;
    bool has_ob = false;
    bool has_eb = false;
    bool complete = false;

    bool operator==(const CompletenessResult&) const = default;
};

void to_json(Json& j, const CompletenessResult& c);

/// Section presence under the minimum-substance rule.
CompletenessResult check_completeness(const StructuredReport& report);

struct CompletenessRates {
    std::size_t reports = 0;
    double s2r = 0.0;
    double ob = 0.0;
    double eb = 0.0;
    double complete = 0.0;
};

void to_json(Json& j, const CompletenessRates& r);

CompletenessRates completeness_rates(const std::vector<CompletenessResult>& results);

/// Plain-text table: Element | Raw | Improved | Imp.
std::string format_completeness_table(const CompletenessRates& raw, const CompletenessRates& improved);

}  // namespace brqual::evaluate
