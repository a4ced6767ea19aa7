#pragma once

#include "brqual/core/error.hpp"
#include "brqual/core/json.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace brqual::jsonl {

/// Parses every non-blank line of a JSONL file.
std::vector<Json> read_lines(const std::filesystem::path& path);

/// Writes one compact JSON value per line (UTF-8, '\n' terminated).
void write_lines(const std::filesystem::path& path, const std::vector<Json>& values);

template <typename T>
std::vector<T> read(const std::filesystem::path& path) {
    std::vector<T> out;
    std::size_t line = 0;
    for (const auto& j : read_lines(path)) {
        ++line;
        try {
            out.push_back(j.get<T>());
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path.string() + ": record " + std::to_string(line) + ": " + e.what());
        }
    }
    return out;
}

template <typename T>
void write(const std::filesystem::path& path, const std::vector<T>& values) {
    std::vector<Json> lines;
    lines.reserve(values.size());
    for (const auto& v : values) lines.emplace_back(v);
    write_lines(path, lines);
}

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace brqual::jsonl
