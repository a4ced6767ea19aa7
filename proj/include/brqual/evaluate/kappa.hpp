#pragma once

#include "brqual/core/json.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace brqual::evaluate {

inline constexpr std::string_view kEmptyCategory = "Empty";

enum class LabelType { S2R, OB, EB };
std::string_view to_string(LabelType t);

enum class ReportVersion { Raw, Improved };
std::string_view to_string(ReportVersion v);

/// Leaf categories of the manual-label hierarchy, written as paths
/// ("Executable/Reproducible/Valid", "Present/Sufficient", ...).
const std::vector<std::string>& label_leaves(LabelType t);

struct ManualLabel {
    std::string key;
    ReportVersion version = ReportVersion::Raw;
    std::optional<std::string> s2r_label;
    std::optional<std::string> ob_label;
    std::optional<std::string> eb_label;
    std::string annotator;

    const std::optional<std::string>& label(LabelType t) const;
    bool operator==(const ManualLabel&) const = default;
};

/// Rejects labels outside the hierarchy's leaf set.
void to_json(Json& j, const ManualLabel& m);
void from_json(const Json& j, ManualLabel& m);

struct KappaResult {
    LabelType label_type = LabelType::S2R;
    double kappa = 1.0;
    double observed_agreement = 1.0;
    std::vector<std::string> categories;
    std::vector<std::vector<long long>> confusion;  // rows: annotator A, columns: annotator B
};

void to_json(Json& j, const KappaResult& k);

/// kappa = (p_o - p_e) / (1 - p_e) from a square count matrix; 1 when
/// p_o = 1. Also returns p_o through `observed`.
double kappa_from_confusion(const std::vector<std::vector<long long>>& confusion, double* observed = nullptr);

/// Empty labels become the Empty category before tabulation. Categories
/// default to the sorted set of observed labels plus Empty.
KappaResult cohens_kappa(const std::vector<std::optional<std::string>>& a,
                         const std::vector<std::optional<std::string>>& b,
                         std::optional<std::vector<std::string>> categories = std::nullopt,
                         LabelType label_type = LabelType::S2R);

/// Pairs annotations per (key, version): exactly two distinct annotators
/// each, the alphabetically first one becoming annotator A. Returns S2R, OB
/// and EB results over the hierarchy leaves plus Empty. Restrict to one
/// version with `only`.
std::vector<KappaResult> kappa_study(const std::vector<ManualLabel>& labels,
                                     std::optional<ReportVersion> only = std::nullopt);

}  // namespace brqual::evaluate
