#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace brqual::evaluate {

/// TF-IDF with raw term counts, IDF = ln((1 + N) / (1 + df)) + 1 and L2
/// normalisation; tokens are lowercased alphanumeric runs.
class TfIdfModel {
public:
    explicit TfIdfModel(const std::vector<std::string>& corpus);

    double idf(const std::string& token) const;
    /// Normalised sparse vector (token -> weight).
    std::map<std::string, double> vectorize(std::string_view doc) const;
    /// Cosine in [0,1]; 0.0 when either vector is zero.
    double cosine(std::string_view a, std::string_view b) const;
    std::size_t corpus_size() const { return n_; }

private:
    std::size_t n_ = 0;
    std::unordered_map<std::string, std::size_t> df_;
};

double tfidf_cosine(std::string_view a, std::string_view b, const std::vector<std::string>& corpus);

/// Word-vector table in the common text format: header "count dim", then
/// one token followed by dim numbers per line.
class WordVectors {
public:
    WordVectors() = default;
    WordVectors(std::size_t dimension, std::unordered_map<std::string, std::vector<double>> vectors);

    static WordVectors load(const std::filesystem::path& path);

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return vectors_.size(); }
    const std::vector<double>* find(const std::string& token) const;

    /// Mean of in-vocabulary token vectors; empty when no token is known.
    std::vector<double> document_vector(std::string_view doc) const;

private:
    std::size_t dimension_ = 0;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

/// Cosine of the averaged word vectors, in [-1,1]. A document without any
/// in-vocabulary token scores 0.0 and a warning is appended when `warnings`
/// is given. Throws EmptyTable for an empty table.
double embedding_cosine(std::string_view a, std::string_view b, const WordVectors& table,
                        std::vector<std::string>* warnings = nullptr);

}  // namespace brqual::evaluate
