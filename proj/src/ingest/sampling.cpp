#include "brqual/ingest/sampling.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/jsonl.hpp"
#include "brqual/core/random.hpp"
#include "brqual/core/text.hpp"
#include "brqual/ingest/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace brqual::ingest {

void to_json(Json& j, const StratumSpec& s) {
    j = Json{{"resolution_name", s.resolution_name},
             {"population_count", s.population_count},
             {"sample_count", s.sample_count}};
}

void from_json(const Json& j, StratumSpec& s) {
    s.resolution_name = j.at("resolution_name").get<std::string>();
    s.population_count = j.at("population_count").get<std::size_t>();
    s.sample_count = j.at("sample_count").get<std::size_t>();
}

namespace {

__extension__ using u128 = unsigned __int128;

// Does stratum a (with sa seats) have strictly higher D'Hondt priority than b?
bool higher_priority(std::size_t ca, std::size_t sa, std::size_t cb, std::size_t sb) {
    return static_cast<u128>(ca) * (sb + 1) > static_cast<u128>(cb) * (sa + 1);
}

}  // namespace

std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total) {
    const auto population = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total > population) throw std::invalid_argument("apportion: total exceeds population");
    std::vector<std::size_t> seats(sizes.size(), 0);
    for (std::size_t house = 1; house <= total; ++house) {
        std::size_t best = sizes.size();
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (seats[i] >= sizes[i]) continue;
            // Upper quota at this house size: seats < size * house / population.
            if (static_cast<u128>(seats[i]) * population >= static_cast<u128>(sizes[i]) * house) continue;
            if (best == sizes.size() || higher_priority(sizes[i], seats[i], sizes[best], seats[best])) best = i;
        }
        if (best == sizes.size()) {
            // Not reachable for the quota method; kept as a plain D'Hondt step.
            for (std::size_t i = 0; i < sizes.size(); ++i) {
                if (seats[i] < sizes[i] &&
                    (best == sizes.size() || higher_priority(sizes[i], seats[i], sizes[best], seats[best]))) {
                    best = i;
                }
            }
        }
        ++seats[best];
    }
    return seats;
}

Sample stratified_sample(const std::vector<RawBugReport>& population, std::size_t total_sample, std::uint64_t seed) {
    if (population.empty()) throw EmptyPopulation("cannot sample from an empty population");
    if (total_sample == 0 || total_sample > population.size()) {
        throw std::invalid_argument("stratified_sample: total_sample must be in [1, population size]");
    }

    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < population.size(); ++i) members[stratum_of(population[i])].push_back(i);

    std::vector<std::pair<std::string, std::vector<std::size_t>>> strata(members.begin(), members.end());
    std::stable_sort(strata.begin(), strata.end(),
                     [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });

    std::vector<std::size_t> sizes;
    for (const auto& s : strata) sizes.push_back(s.second.size());
    const auto seats = apportion(sizes, total_sample);

    Sample sample;
    sample.seed = seed;
    std::mt19937_64 gen(seed);
    for (std::size_t s = 0; s < strata.size(); ++s) {
        auto indices = strata[s].second;
        // Partial Fisher-Yates: the first seats[s] positions become the draw.
        for (std::size_t k = 0; k < seats[s]; ++k) {
            const auto j = k + rng::uniform_below(gen, indices.size() - k);
            std::swap(indices[k], indices[j]);
        }
        indices.resize(seats[s]);
        std::sort(indices.begin(), indices.end());
        for (auto idx : indices) {
            sample.reports.push_back(population[idx]);
            sample.strata.push_back(strata[s].first);
        }
        sample.table.push_back({strata[s].first, sizes[s], seats[s]});
    }
    return sample;
}

double margin_of_error(std::size_t population_size, std::size_t sample_size, double proportion, double confidence_z) {
    if (population_size == 0 || sample_size == 0 || sample_size > population_size) {
        throw std::invalid_argument("margin_of_error: need 0 < n <= N");
    }
    if (proportion < 0.0 || proportion > 1.0) throw std::invalid_argument("margin_of_error: p outside [0,1]");
    if (sample_size == population_size) return 0.0;
    const double N = static_cast<double>(population_size);
    const double n = static_cast<double>(sample_size);
    const double fpc = std::sqrt((N - n) / (N - 1.0));
    return confidence_z * std::sqrt(proportion * (1.0 - proportion) / n) * fpc;
}

std::vector<RawBugReport> filter_target_resolutions(const std::vector<RawBugReport>& sample,
                                                    const std::vector<std::string>& targets) {
    std::vector<RawBugReport> out;
    for (const auto& r : sample) {
        if (!r.resolution) continue;
        const auto& res = *r.resolution;
        if (std::any_of(targets.begin(), targets.end(),
                        [&](const std::string& t) { return text::iequals(text::trim(t), text::trim(res)); })) {
            out.push_back(r);
        }
    }
    return out;
}

void write_sample_manifest(const std::filesystem::path& path, const Sample& sample) {
    std::vector<Json> lines;
    lines.push_back(Json{{"type", "header"},
                         {"seed", sample.seed},
                         {"total", sample.reports.size()},
                         {"strata", sample.table}});
    for (std::size_t i = 0; i < sample.reports.size(); ++i) {
        lines.push_back(Json{{"key", sample.reports[i].key}, {"stratum", sample.strata[i]}});
    }
    jsonl::write_lines(path, lines);
}

}  // namespace brqual::ingest
