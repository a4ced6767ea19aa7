#pragma once

// Reference low-quality classifier: logistic regression over L2-normalised
// TF-IDF unigram features. Stands behind the same interface a fine-tuned
// transformer would.

#include "brqual/core/json.hpp"
#include "brqual/core/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace brqual::detect {

enum class QualityLabel { LowQuality, HighQuality };

std::string_view to_string(QualityLabel label);
std::optional<QualityLabel> parse_quality_label(std::string_view text);

struct LabeledExample {
    std::string key;
    std::string text;
    QualityLabel label = QualityLabel::LowQuality;

    bool operator==(const LabeledExample&) const = default;
};

void to_json(Json& j, const LabeledExample& e);
void from_json(const Json& j, LabeledExample& e);

struct TrainingConfig {
    int epochs = 60;
    double learning_rate = 0.5;
    double l2 = 1e-4;
    std::uint64_t seed = 42;
    double threshold = 0.5;
};

struct ClassifierMetadata {
    std::string trained_at;
    std::string training_corpus_hash;
    std::size_t labeled_count = 0;
    std::size_t validation_count = 0;
    std::optional<double> validation_accuracy;

    bool operator==(const ClassifierMetadata&) const = default;
};

inline constexpr int kModelFormatVersion = 1;

struct ClassifierModel {
    std::map<std::string, std::size_t> vocabulary;
    std::map<std::string, double> idf;
    std::vector<double> weights;  // one per vocabulary entry, bias last
    double threshold = 0.5;
    ClassifierMetadata metadata;

    /// Sparse L2-normalised TF-IDF vector, sorted by index. OOV tokens are
    /// ignored.
    std::vector<std::pair<std::size_t, double>> features(std::string_view text) const;

    std::vector<std::string> validate() const;

    void save(const std::filesystem::path& path) const;
    static ClassifierModel load(const std::filesystem::path& path);

    bool operator==(const ClassifierModel&) const = default;
};

void to_json(Json& j, const ClassifierModel& m);
void from_json(const Json& j, ClassifierModel& m);

/// Text a report is classified on: summary and description, newline-joined.
std::string classifier_text(std::string_view summary, std::string_view description);

/// Trains on LowQuality = 1. Throws InsufficientData for fewer than two
/// examples and DegenerateLabels when only one label occurs.
ClassifierModel train_classifier(const std::vector<LabeledExample>& examples, const TrainingConfig& config,
                                 Timestamp trained_at);

/// Probability of low quality: sigmoid of the linear score.
double classify(const ClassifierModel& model, std::string_view text);

}  // namespace brqual::detect
