#include "brqual/evaluate/stats.hpp"

#include "brqual/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace brqual::evaluate {

std::vector<double> nonzero_differences(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw LengthMismatch("paired samples differ in length (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    }
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        if (diff != 0.0) d.push_back(diff);
    }
    return d;
}

std::vector<double> signed_rank_ranks(const std::vector<double>& differences) {
    const auto n = differences.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return std::fabs(differences[i]) < std::fabs(differences[j]); });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::fabs(differences[order[j + 1]]) == std::fabs(differences[order[i]])) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

namespace {

double w_plus_of(const std::vector<double>& d, const std::vector<double>& ranks) {
    double w = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] > 0) w += ranks[i];
    }
    return w;
}

}  // namespace

double wilcoxon_exact_p(const std::vector<double>& differences) {
    const auto n = differences.size();
    if (n == 0) return 1.0;
    if (n > 62) throw std::invalid_argument("exact Wilcoxon enumeration limited to 62 pairs");
    const auto ranks = signed_rank_ranks(differences);
    // Average ranks are multiples of 1/2, so doubled ranks are integers.
    std::vector<std::size_t> doubled(n);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        doubled[i] = static_cast<std::size_t>(std::llround(ranks[i] * 2.0));
        total += doubled[i];
    }
    // counts[s] = number of sign assignments whose doubled W+ equals s.
    std::vector<std::uint64_t> counts(total + 1, 0);
    counts[0] = 1;
    std::size_t reach = 0;
    for (auto r : doubled) {
        for (std::size_t s = reach + 1; s-- > 0;) {
            if (counts[s]) counts[s + r] += counts[s];
        }
        reach += r;
    }
    const auto w_plus = static_cast<std::size_t>(std::llround(w_plus_of(differences, ranks) * 2.0));
    const auto w_min = std::min(w_plus, total - w_plus);
    // P(min(T, total - T) <= w_min) = P(T <= w_min) + P(T >= total - w_min), minus overlap.
    std::uint64_t hits = 0;
    for (std::size_t s = 0; s <= total; ++s) {
        if (std::min(s, total - s) <= w_min) hits += counts[s];
    }
    return static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(n));
}

double wilcoxon_normal_p(const std::vector<double>& differences) {
    const auto n = static_cast<double>(differences.size());
    if (differences.empty()) return 1.0;
    const auto ranks = signed_rank_ranks(differences);
    const double w_plus = w_plus_of(differences, ranks);
    const double mean = n * (n + 1.0) / 4.0;
    double tie_term = 0.0;
    {
        std::vector<double> sorted = ranks;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i);
            tie_term += t * t * t - t;
            i = j;
        }
    }
    const double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (variance <= 0.0) return 1.0;
    const double z = std::max(0.0, std::fabs(w_plus - mean) - 0.5) / std::sqrt(variance);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    const auto d = nonzero_differences(a, b);
    if (d.size() < kMinWilcoxonPairs) {
        throw TooFewPairs("Wilcoxon test needs at least " + std::to_string(kMinWilcoxonPairs) +
                          " non-zero differences, got " + std::to_string(d.size()));
    }
    WilcoxonResult r;
    r.n = d.size();
    const auto ranks = signed_rank_ranks(d);
    r.w_plus = w_plus_of(d, ranks);
    const double total = static_cast<double>(r.n) * static_cast<double>(r.n + 1) / 2.0;
    r.w_statistic = std::min(r.w_plus, total - r.w_plus);
    r.exact = r.n <= kExactWilcoxonMaxN;
    r.p_value = r.exact ? wilcoxon_exact_p(d) : wilcoxon_normal_p(d);
    return r;
}

std::string_view to_string(Magnitude m) {
    switch (m) {
        case Magnitude::Negligible: return "Negligible";
        case Magnitude::Small: return "Small";
        case Magnitude::Medium: return "Medium";
        case Magnitude::Large: return "Large";
    }
    return "Negligible";
}

Magnitude delta_magnitude(double delta) {
    const double d = std::fabs(delta);
    if (d < 0.147) return Magnitude::Negligible;
    if (d < 0.33) return Magnitude::Small;
    if (d < 0.474) return Magnitude::Medium;
    return Magnitude::Large;
}

CliffsDelta cliffs_delta(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("cliffs_delta: both groups must be non-empty");
    std::vector<double> sorted_b = b;
    std::sort(sorted_b.begin(), sorted_b.end());
    std::int64_t greater = 0;
    std::int64_t less = 0;
    for (double x : a) {
        greater += std::lower_bound(sorted_b.begin(), sorted_b.end(), x) - sorted_b.begin();
        less += sorted_b.end() - std::upper_bound(sorted_b.begin(), sorted_b.end(), x);
    }
    CliffsDelta r;
    r.delta = static_cast<double>(greater - less) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    r.magnitude = delta_magnitude(r.delta);
    return r;
}

double bonferroni(double alpha, std::size_t tests) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bonferroni: alpha must lie in (0,1)");
    if (tests == 0) throw std::invalid_argument("bonferroni: need at least one test");
    return alpha / static_cast<double>(tests);
}

}  // namespace brqual::evaluate
