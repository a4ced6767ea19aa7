#pragma once

// Shortcuts to the shipped fixture corpus and its replay configuration.

#include "brqual/app/config.hpp"
#include "brqual/improve/catalog.hpp"
#include "brqual/ingest/tracker.hpp"
#include "brqual/provider/gateway.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace brqual::testkit {

inline std::filesystem::path fixture_path(const std::string& name = {}) {
    return std::filesystem::path(BRQUAL_FIXTURE_DIR) / name;
}

inline app::PipelineConfig fixture_config() {
    return app::load_config(fixture_path("config.json"), Json::object(),
                            [](const std::string&) -> std::optional<std::string> { return std::nullopt; });
}

inline std::unique_ptr<provider::Gateway> replay_gateway() {
    return std::make_unique<provider::Gateway>(fixture_config().gateway_config());
}

inline const improve::PromptCatalog& shipped_catalog() {
    static const auto kCatalog = improve::PromptCatalog::load(std::filesystem::path(BRQUAL_DATA_DIR) / "prompts");
    return kCatalog;
}

inline std::vector<RawBugReport> fixture_reports() {
    ingest::FixtureTracker tracker(fixture_path("issues"));
    return ingest::fetch_reports(tracker, ingest::FetchQuery{});
}

}  // namespace brqual::testkit
