#pragma once

#include "brqual/core/json.hpp"
#include "brqual/core/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace brqual::ingest {

struct StratumSpec {
    std::string resolution_name;
    std::size_t population_count = 0;
    std::size_t sample_count = 0;

    bool operator==(const StratumSpec&) const = default;
};

void to_json(Json& j, const StratumSpec& s);
void from_json(const Json& j, StratumSpec& s);

struct Sample {
    std::vector<RawBugReport> reports;   // grouped by stratum, population order within
    std::vector<std::string> strata;     // stratum name per report
    std::vector<StratumSpec> table;      // largest stratum first
    std::uint64_t seed = 0;
};

/// Apportions `total` seats over strata of the given sizes with the quota
/// method: seats are handed out one at a time by D'Hondt priority
/// (size / (seats + 1)), restricted to strata that are still below their
/// upper quota at the current house size. Ties go to the earlier stratum.
/// Every result satisfies floor(q) <= seats <= ceil(q) and sums to total.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total);

/// Proportional stratified sample by resolution. Selection inside a stratum
/// is uniform without replacement under a seeded 64-bit Mersenne Twister;
/// the same seed always yields the same sample.
Sample stratified_sample(const std::vector<RawBugReport>& population, std::size_t total_sample, std::uint64_t seed);

/// Margin of error with finite-population correction:
/// z * sqrt(p (1 - p) / n) * sqrt((N - n) / (N - 1)).
double margin_of_error(std::size_t population_size, std::size_t sample_size, double proportion,
                       double confidence_z);

inline const std::vector<std::string>& default_target_resolutions() {
    static const std::vector<std::string> kTargets{"Awaiting Response", "Cannot Reproduce", "Incomplete"};
    return kTargets;
}

/// Keeps reports whose resolution matches one of the names (case-insensitive);
/// input order is preserved.
std::vector<RawBugReport> filter_target_resolutions(const std::vector<RawBugReport>& sample,
                                                    const std::vector<std::string>& targets =
                                                        default_target_resolutions());

/// Manifest: a header record {type: "header", seed, total, strata: [...]}
/// followed by one {key, stratum} record per sampled report.
void write_sample_manifest(const std::filesystem::path& path, const Sample& sample);

}  // namespace brqual::ingest
