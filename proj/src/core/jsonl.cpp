#include "brqual/core/jsonl.hpp"

#include "brqual/core/text.hpp"

#include <sstream>

namespace brqual::jsonl {

std::vector<Json> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("cannot open " + path.string());
    std::vector<Json> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<Json>& values) {
    std::string out;
    for (const auto& v : values) {
        out += v.dump(-1, ' ', false, Json::error_handler_t::replace);
        out += '\n';
    }
    write_file(path, out);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ArtifactError("cannot write " + path.string());
    out << contents;
    if (!out) throw ArtifactError("write failed: " + path.string());
}

}  // namespace brqual::jsonl
