#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace brqual::text {

// Minimum number of alphanumeric tokens for a section to count as present.
inline constexpr std::size_t kSubstanceThreshold = 3;

/// Lowercased runs of ASCII letters and digits, in order of appearance.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view text);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view text, std::string_view prefix);

std::string_view trim(std::string_view text);
std::string trim_copy(std::string_view text);

/// Collapses every run of whitespace into a single space and trims both ends.
std::string collapse_whitespace(std::string_view text);

std::vector<std::string_view> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view separator);

bool is_substantive(std::string_view text, std::size_t min_tokens = kSubstanceThreshold);

/// Fraction of the candidate's tokens that also occur in the source.
/// An empty candidate is trivially contained (1.0).
double token_overlap(std::string_view candidate, std::string_view source);

/// Fuzzy-substring check used wherever extracted text must originate from a
/// source document.
bool fuzzy_contained(std::string_view candidate, std::string_view source, double min_overlap = 0.9);

/// Leading list marker ("1.", "2)", "-", "*", "#") of a line, or empty when
/// the line does not start with one. The returned view includes trailing
/// whitespace after the marker.
std::string_view list_marker(std::string_view line);

std::string strip_list_marker(std::string_view line);

/// Hex-encoded SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace brqual::text
