#include "brqual/evaluate/kappa.hpp"

#include "brqual/core/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace brqual::evaluate {

std::string_view to_string(LabelType t) {
    switch (t) {
        case LabelType::S2R: return "S2R";
        case LabelType::OB: return "OB";
        case LabelType::EB: return "EB";
    }
    return "S2R";
}

std::string_view to_string(ReportVersion v) { return v == ReportVersion::Raw ? "Raw" : "Improved"; }

const std::vector<std::string>& label_leaves(LabelType t) {
    static const std::vector<std::string> kS2r{
        "Executable/Reproducible/Valid", "Executable/Reproducible/Invalid", "Executable/Irreproducible",
        "NonExecutable/AmbiguousInfo",   "NonExecutable/MissingInfo",       "NonExecutable/WrongInfo"};
    static const std::vector<std::string> kOb{"NotPresent", "Present/Sufficient", "Present/Insufficient"};
    static const std::vector<std::string> kEb{"NotPresent", "Present/Accurate", "Present/Inaccurate"};
    switch (t) {
        case LabelType::S2R: return kS2r;
        case LabelType::OB: return kOb;
        case LabelType::EB: return kEb;
    }
    return kS2r;
}

const std::optional<std::string>& ManualLabel::label(LabelType t) const {
    switch (t) {
        case LabelType::S2R: return s2r_label;
        case LabelType::OB: return ob_label;
        case LabelType::EB: return eb_label;
    }
    return s2r_label;
}

namespace {

Json optional_json(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<std::string> read_label(const Json& j, const char* field, LabelType t, const std::string& key) {
    if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
    auto value = j.at(field).get<std::string>();
    if (value.empty()) return std::nullopt;
    const auto& leaves = label_leaves(t);
    if (std::find(leaves.begin(), leaves.end(), value) == leaves.end()) {
        throw SchemaError("annotation " + key + ": '" + value + "' is not a " + std::string(to_string(t)) + " label");
    }
    return value;
}

}  // namespace

void to_json(Json& j, const ManualLabel& m) {
    j = Json{{"key", m.key},
             {"version", to_string(m.version)},
             {"s2r_label", optional_json(m.s2r_label)},
             {"ob_label", optional_json(m.ob_label)},
             {"eb_label", optional_json(m.eb_label)},
             {"annotator", m.annotator}};
}

void from_json(const Json& j, ManualLabel& m) {
    for (const char* field : {"key", "version", "annotator"}) {
        if (!j.contains(field)) throw SchemaError(std::string("missing field: ") + field);
    }
    m.key = j.at("key").get<std::string>();
    const auto version = j.at("version").get<std::string>();
    if (version == "Raw") {
        m.version = ReportVersion::Raw;
    } else if (version == "Improved") {
        m.version = ReportVersion::Improved;
    } else {
        throw SchemaError("annotation " + m.key + ": unknown version '" + version + "'");
    }
    m.s2r_label = read_label(j, "s2r_label", LabelType::S2R, m.key);
    m.ob_label = read_label(j, "ob_label", LabelType::OB, m.key);
    m.eb_label = read_label(j, "eb_label", LabelType::EB, m.key);
    m.annotator = j.at("annotator").get<std::string>();
}

void to_json(Json& j, const KappaResult& k) {
    j = Json{{"label_type", to_string(k.label_type)},
             {"kappa", k.kappa},
             {"observed_agreement", k.observed_agreement},
             {"categories", k.categories},
             {"confusion", k.confusion}};
}

double kappa_from_confusion(const std::vector<std::vector<long long>>& confusion, double* observed) {
    const auto k = confusion.size();
    long long total = 0;
    long long diagonal = 0;
    std::vector<long long> rows(k, 0);
    std::vector<long long> cols(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        if (confusion[i].size() != k) throw std::invalid_argument("confusion matrix must be square");
        for (std::size_t j = 0; j < k; ++j) {
            total += confusion[i][j];
            rows[i] += confusion[i][j];
            cols[j] += confusion[i][j];
        }
        diagonal += confusion[i][i];
    }
    if (total == 0) throw std::invalid_argument("confusion matrix is empty");
    const double n = static_cast<double>(total);
    const double po = static_cast<double>(diagonal) / n;
    if (observed) *observed = po;
    if (diagonal == total) return 1.0;
    double pe = 0.0;
    for (std::size_t i = 0; i < k; ++i) pe += (static_cast<double>(rows[i]) / n) * (static_cast<double>(cols[i]) / n);
    return (po - pe) / (1.0 - pe);
}

KappaResult cohens_kappa(const std::vector<std::optional<std::string>>& a,
                         const std::vector<std::optional<std::string>>& b,
                         std::optional<std::vector<std::string>> categories, LabelType label_type) {
    if (a.size() != b.size()) {
        throw LengthMismatch("annotator label lists differ in length (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw std::invalid_argument("cohens_kappa: no labels");
    KappaResult r;
    r.label_type = label_type;
    if (categories) {
        r.categories = std::move(*categories);
    } else {
        std::set<std::string> seen;
        for (const auto* list : {&a, &b}) {
            for (const auto& l : *list) {
                if (l) seen.insert(*l);
            }
        }
        r.categories.assign(seen.begin(), seen.end());
    }
    if (std::find(r.categories.begin(), r.categories.end(), kEmptyCategory) == r.categories.end()) {
        r.categories.emplace_back(kEmptyCategory);
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < r.categories.size(); ++i) index.emplace(r.categories[i], i);
    auto slot = [&](const std::optional<std::string>& l) {
        const std::string name = l ? *l : std::string(kEmptyCategory);
        auto it = index.find(name);
        if (it == index.end()) throw SchemaError("label '" + name + "' is not among the kappa categories");
        return it->second;
    };
    r.confusion.assign(r.categories.size(), std::vector<long long>(r.categories.size(), 0));
    for (std::size_t i = 0; i < a.size(); ++i) ++r.confusion[slot(a[i])][slot(b[i])];
    r.kappa = kappa_from_confusion(r.confusion, &r.observed_agreement);
    return r;
}

std::vector<KappaResult> kappa_study(const std::vector<ManualLabel>& labels, std::optional<ReportVersion> only) {
    std::map<std::pair<std::string, ReportVersion>, std::vector<const ManualLabel*>> groups;
    for (const auto& l : labels) {
        if (only && l.version != *only) continue;
        groups[{l.key, l.version}].push_back(&l);
    }
    if (groups.empty()) throw UnpairedAnnotation("no annotations to compare");
    std::vector<std::pair<const ManualLabel*, const ManualLabel*>> pairs;
    for (auto& [id, members] : groups) {
        const auto name = id.first + " (" + std::string(to_string(id.second)) + ")";
        if (members.size() != 2) {
            throw UnpairedAnnotation(name + " has " + std::to_string(members.size()) + " annotations, expected 2");
        }
        std::sort(members.begin(), members.end(),
                  [](const ManualLabel* x, const ManualLabel* y) { return x->annotator < y->annotator; });
        if (members[0]->annotator == members[1]->annotator) {
            throw UnpairedAnnotation(name + " is annotated twice by " + members[0]->annotator);
        }
        pairs.emplace_back(members[0], members[1]);
    }
    std::vector<KappaResult> out;
    for (auto t : {LabelType::S2R, LabelType::OB, LabelType::EB}) {
        std::vector<std::optional<std::string>> a;
        std::vector<std::optional<std::string>> b;
        for (const auto& [x, y] : pairs) {
            a.push_back(x->label(t));
            b.push_back(y->label(t));
        }
        out.push_back(cohens_kappa(a, b, label_leaves(t), t));
    }
    return out;
}

}  // namespace brqual::evaluate
