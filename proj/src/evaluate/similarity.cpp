#include "brqual/evaluate/similarity.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace brqual::evaluate {

TfIdfModel::TfIdfModel(const std::vector<std::string>& corpus) : n_(corpus.size()) {
    for (const auto& doc : corpus) {
        std::set<std::string> seen;
        for (auto& t : text::tokenize(doc)) seen.insert(std::move(t));
        for (const auto& t : seen) ++df_[t];
    }
}

double TfIdfModel::idf(const std::string& token) const {
    auto it = df_.find(token);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(n_)) / (1.0 + df)) + 1.0;
}

std::map<std::string, double> TfIdfModel::vectorize(std::string_view doc) const {
    std::map<std::string, double> v;
    for (auto& t : text::tokenize(doc)) v[std::move(t)] += 1.0;
    double norm = 0.0;
    for (auto& [token, weight] : v) {
        weight *= idf(token);
        norm += weight * weight;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (auto& [token, weight] : v) weight /= norm;
    }
    return v;
}

double TfIdfModel::cosine(std::string_view a, std::string_view b) const {
    const auto va = vectorize(a);
    const auto vb = vectorize(b);
    if (va.empty() || vb.empty()) return 0.0;
    double dot = 0.0;
    auto ia = va.begin();
    auto ib = vb.begin();
    while (ia != va.end() && ib != vb.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            dot += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return std::clamp(dot, 0.0, 1.0);
}

double tfidf_cosine(std::string_view a, std::string_view b, const std::vector<std::string>& corpus) {
    return TfIdfModel(corpus).cosine(a, b);
}

WordVectors::WordVectors(std::size_t dimension, std::unordered_map<std::string, std::vector<double>> vectors)
    : dimension_(dimension), vectors_(std::move(vectors)) {
    for (const auto& [token, v] : vectors_) {
        if (v.size() != dimension_) throw SchemaError("word vector for '" + token + "' has the wrong dimension");
    }
}

WordVectors WordVectors::load(const std::filesystem::path& path) {
    std::istringstream in(jsonl::read_file(path));
    std::size_t count = 0;
    std::size_t dim = 0;
    std::string header;
    if (!std::getline(in, header)) throw EmptyTable("word-vector file " + path.string() + " is empty");
    {
        std::istringstream h(header);
        if (!(h >> count >> dim) || dim == 0) {
            throw SchemaError("word-vector file " + path.string() + ": header must be \"count dim\"");
        }
    }
    std::unordered_map<std::string, std::vector<double>> vectors;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        std::istringstream l(line);
        std::string token;
        l >> token;
        std::vector<double> v(dim);
        for (auto& x : v) {
            if (!(l >> x)) {
                throw SchemaError("word-vector file " + path.string() + ": line " + std::to_string(line_no) +
                                  " has fewer than " + std::to_string(dim) + " values");
            }
        }
        vectors.emplace(text::to_lower(token), std::move(v));
    }
    if (vectors.empty()) throw EmptyTable("word-vector file " + path.string() + " has no vectors");
    return WordVectors(dim, std::move(vectors));
}

const std::vector<double>* WordVectors::find(const std::string& token) const {
    auto it = vectors_.find(token);
    return it == vectors_.end() ? nullptr : &it->second;
}

std::vector<double> WordVectors::document_vector(std::string_view doc) const {
    std::vector<double> sum(dimension_, 0.0);
    std::size_t known = 0;
    for (const auto& t : text::tokenize(doc)) {
        const auto* v = find(t);
        if (!v) continue;
        ++known;
        for (std::size_t k = 0; k < dimension_; ++k) sum[k] += (*v)[k];
    }
    if (known == 0) return {};
    for (auto& x : sum) x /= static_cast<double>(known);
    return sum;
}

double embedding_cosine(std::string_view a, std::string_view b, const WordVectors& table,
                        std::vector<std::string>* warnings) {
    if (table.size() == 0) throw EmptyTable("word-vector table is empty");
    const auto va = table.document_vector(a);
    const auto vb = table.document_vector(b);
    if (va.empty() || vb.empty()) {
        if (warnings) warnings->emplace_back("document without in-vocabulary tokens scored 0.0");
        return 0.0;
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t k = 0; k < va.size(); ++k) {
        dot += va[k] * vb[k];
        na += va[k] * va[k];
        nb += vb[k] * vb[k];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace brqual::evaluate
