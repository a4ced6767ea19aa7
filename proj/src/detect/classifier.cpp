#include "brqual/detect/classifier.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/random.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace brqual::detect {

std::string_view to_string(QualityLabel label) {
    return label == QualityLabel::LowQuality ? "LowQuality" : "HighQuality";
}

std::optional<QualityLabel> parse_quality_label(std::string_view text) {
    if (text::iequals(text, "LowQuality")) return QualityLabel::LowQuality;
    if (text::iequals(text, "HighQuality")) return QualityLabel::HighQuality;
    return std::nullopt;
}

void to_json(Json& j, const LabeledExample& e) {
    j = Json{{"key", e.key}, {"text", e.text}, {"label", to_string(e.label)}};
}

void from_json(const Json& j, LabeledExample& e) {
    for (const char* field : {"key", "text", "label"}) {
        if (!j.contains(field)) throw SchemaError(std::string("missing field: ") + field);
    }
    e.key = j.at("key").get<std::string>();
    e.text = j.at("text").get<std::string>();
    auto label = parse_quality_label(j.at("label").get<std::string>());
    if (!label) throw SchemaError("unknown label: " + j.at("label").get<std::string>());
    e.label = *label;
    if (text::trim(e.text).empty()) throw SchemaError("labeled example " + e.key + " has empty text");
}

void to_json(Json& j, const ClassifierModel& m) {
    Json meta{{"trained_at", m.metadata.trained_at},
              {"training_corpus_hash", m.metadata.training_corpus_hash},
              {"labeled_count", m.metadata.labeled_count},
              {"validation_count", m.metadata.validation_count},
              {"validation_accuracy", nullptr}};
    if (m.metadata.validation_accuracy) meta["validation_accuracy"] = *m.metadata.validation_accuracy;
    j = Json{{"format_version", kModelFormatVersion},
             {"vocabulary", m.vocabulary},
             {"idf", m.idf},
             {"weights", m.weights},
             {"threshold", m.threshold},
             {"metadata", meta}};
}

void from_json(const Json& j, ClassifierModel& m) {
    for (const char* field : {"format_version", "vocabulary", "idf", "weights", "threshold", "metadata"}) {
        if (!j.contains(field)) throw SchemaError(std::string("missing field: ") + field);
    }
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
        throw SchemaError("unsupported classifier format_version " + j.at("format_version").dump());
    }
    m.vocabulary = j.at("vocabulary").get<std::map<std::string, std::size_t>>();
    m.idf = j.at("idf").get<std::map<std::string, double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.threshold = j.at("threshold").get<double>();
    const auto& meta = j.at("metadata");
    m.metadata.trained_at = meta.value("trained_at", "");
    m.metadata.training_corpus_hash = meta.value("training_corpus_hash", "");
    m.metadata.labeled_count = meta.value("labeled_count", std::size_t{0});
    m.metadata.validation_count = meta.value("validation_count", std::size_t{0});
    m.metadata.validation_accuracy.reset();
    if (meta.contains("validation_accuracy") && !meta.at("validation_accuracy").is_null()) {
        m.metadata.validation_accuracy = meta.at("validation_accuracy").get<double>();
    }
}

std::vector<std::pair<std::size_t, double>> ClassifierModel::features(std::string_view text) const {
    std::map<std::string, double> counts;
    for (auto& token : text::tokenize(text)) {
        if (vocabulary.count(token)) counts[std::move(token)] += 1.0;
    }
    std::vector<std::pair<std::size_t, double>> out;
    double norm = 0.0;
    for (const auto& [token, tf] : counts) {
        const double value = tf * idf.at(token);
        out.emplace_back(vocabulary.at(token), value);
        norm += value * value;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (auto& f : out) f.second /= norm;
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> ClassifierModel::validate() const {
    std::vector<std::string> problems;
    if (weights.size() != vocabulary.size() + 1) problems.emplace_back("weights length must be vocabulary size + 1");
    if (!(threshold > 0.0 && threshold < 1.0)) problems.emplace_back("threshold must lie in (0,1)");
    if (idf.size() != vocabulary.size()) problems.emplace_back("idf and vocabulary differ in size");
    for (const auto& [token, index] : vocabulary) {
        if (index >= vocabulary.size()) problems.push_back("vocabulary index out of range for '" + token + "'");
        if (!idf.count(token)) problems.push_back("no idf for '" + token + "'");
    }
    return problems;
}

void ClassifierModel::save(const std::filesystem::path& path) const {
    jsonl::write_file(path, Json(*this).dump(2) + "\n");
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& path) {
    ClassifierModel m;
    try {
        m = Json::parse(jsonl::read_file(path)).get<ClassifierModel>();
    } catch (const Json::exception& e) {
        throw SchemaError("classifier model " + path.string() + ": " + e.what());
    }
    auto problems = m.validate();
    if (!problems.empty()) throw SchemaError("classifier model " + path.string() + ": " + text::join(problems, "; "));
    return m;
}

std::string classifier_text(std::string_view summary, std::string_view description) {
    std::string s(summary);
    s += "\n";
    s += description;
    return s;
}

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double linear_score(const std::vector<double>& weights, const std::vector<std::pair<std::size_t, double>>& x) {
    double z = weights.back();
    for (const auto& [index, value] : x) z += weights[index] * value;
    return z;
}

double target(QualityLabel label) { return label == QualityLabel::LowQuality ? 1.0 : 0.0; }

std::string corpus_hash(const std::vector<LabeledExample>& examples) {
    std::string all;
    for (const auto& e : examples) {
        all += Json(e).dump();
        all += "\n";
    }
    return text::sha256_hex(all);
}

}  // namespace

ClassifierModel train_classifier(const std::vector<LabeledExample>& examples, const TrainingConfig& config,
                                 Timestamp trained_at) {
    if (examples.size() < 2) throw InsufficientData("training needs at least two labeled examples");
    std::set<QualityLabel> labels;
    for (const auto& e : examples) labels.insert(e.label);
    if (labels.size() < 2) throw DegenerateLabels("training data contains a single label");
    if (!(config.threshold > 0.0 && config.threshold < 1.0)) {
        throw std::invalid_argument("classifier threshold must lie in (0,1)");
    }

    std::mt19937_64 gen(config.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng::shuffle(order, gen);
    // 10% held out, at least one example once there are enough to spare.
    std::size_t validation_count = examples.size() >= 3 ? std::max<std::size_t>(1, (examples.size() + 5) / 10) : 0;
    std::vector<std::size_t> validation(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(validation_count));
    std::vector<std::size_t> training(order.begin() + static_cast<std::ptrdiff_t>(validation_count), order.end());

    ClassifierModel model;
    model.threshold = config.threshold;
    // Vocabulary and document frequencies come from the training split only.
    std::map<std::string, std::size_t> df;
    for (auto i : training) {
        std::set<std::string> seen;
        for (auto& t : text::tokenize(examples[i].text)) seen.insert(std::move(t));
        for (const auto& t : seen) ++df[t];
    }
    const double n = static_cast<double>(training.size());
    for (const auto& [token, count] : df) {
        model.vocabulary.emplace(token, model.vocabulary.size());
        model.idf.emplace(token, std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    model.weights.assign(model.vocabulary.size() + 1, 0.0);

    std::vector<std::vector<std::pair<std::size_t, double>>> x(examples.size());
    for (auto i : order) x[i] = model.features(examples[i].text);

    auto& w = model.weights;
    const std::size_t bias = w.size() - 1;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng::shuffle(training, gen);
        for (auto i : training) {
            const double err = sigmoid(linear_score(w, x[i])) - target(examples[i].label);
            if (config.l2 > 0.0) {
                const double decay = 1.0 - config.learning_rate * config.l2;
                for (std::size_t k = 0; k < bias; ++k) w[k] *= decay;
            }
            for (const auto& [index, value] : x[i]) w[index] -= config.learning_rate * err * value;
            w[bias] -= config.learning_rate * err;
        }
    }

    model.metadata.trained_at = format_timestamp(trained_at);
    model.metadata.training_corpus_hash = corpus_hash(examples);
    model.metadata.labeled_count = examples.size();
    model.metadata.validation_count = validation.size();
    if (!validation.empty()) {
        std::size_t correct = 0;
        for (auto i : validation) {
            const bool predicted_low = sigmoid(linear_score(w, x[i])) >= model.threshold;
            correct += predicted_low == (examples[i].label == QualityLabel::LowQuality);
        }
        model.metadata.validation_accuracy = static_cast<double>(correct) / static_cast<double>(validation.size());
    }
    return model;
}

double classify(const ClassifierModel& model, std::string_view text) {
    if (model.vocabulary.empty()) throw std::invalid_argument("classify: model vocabulary is empty");
    return sigmoid(linear_score(model.weights, model.features(text)));
}

}  // namespace brqual::detect
