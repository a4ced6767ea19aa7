#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace brqual::evaluate {

inline constexpr std::size_t kMinWilcoxonPairs = 5;
inline constexpr std::size_t kExactWilcoxonMaxN = 25;

struct WilcoxonResult {
    double w_statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double p_value = 1.0;      // two-sided
    std::size_t n = 0;         // pairs after dropping zero differences
    bool exact = true;
};

/// Non-zero differences a[i] - b[i] (zero differences dropped).
std::vector<double> nonzero_differences(const std::vector<double>& a, const std::vector<double>& b);

/// Average ranks (1-based) of |d|, ties sharing the mean rank.
std::vector<double> signed_rank_ranks(const std::vector<double>& differences);

/// Exact two-sided p: probability under random signs that min(W+, W-) is at
/// most the observed value, computed over the actual (tied) ranks.
double wilcoxon_exact_p(const std::vector<double>& differences);

/// Normal approximation with tie and continuity corrections.
double wilcoxon_normal_p(const std::vector<double>& differences);

/// Paired two-sided test; exact up to kExactWilcoxonMaxN pairs. Throws
/// LengthMismatch for unequal inputs and TooFewPairs for fewer than five
/// non-zero differences.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

enum class Magnitude { Negligible, Small, Medium, Large };
std::string_view to_string(Magnitude m);
Magnitude delta_magnitude(double delta);

struct CliffsDelta {
    double delta = 0.0;
    Magnitude magnitude = Magnitude::Negligible;
};

/// (#{a > b} - #{a < b}) / (|A| |B|) over all cross pairs.
CliffsDelta cliffs_delta(const std::vector<double>& a, const std::vector<double>& b);

double bonferroni(double alpha, std::size_t tests);

}  // namespace brqual::evaluate
