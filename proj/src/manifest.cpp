#include "mme/manifest.hpp"

#include <boost/uuid/detail/sha1.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace mme {

std::string git_blob_hash(std::string_view bytes) {
    boost::uuids::detail::sha1 sha;
    const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
    sha.process_bytes(header.data(), header.size());
    sha.process_bytes(bytes.data(), bytes.size());
    boost::uuids::detail::sha1::digest_type digest;
    sha.get_digest(digest);
    std::string out;
    char buf[9];
    for (unsigned word : digest) {
        std::snprintf(buf, sizeof buf, "%08x", word);
        out += buf;
    }
    return out;
}

namespace {

std::string file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

std::string content_hash(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(path)) return git_blob_hash(file_bytes(path));
    std::vector<std::string> lines;
    for (const auto& entry : fs::recursive_directory_iterator(path))
        if (entry.is_regular_file())
            lines.push_back(fs::relative(entry.path(), path).generic_string() + ' ' +
                            git_blob_hash(file_bytes(entry.path())));
    std::sort(lines.begin(), lines.end());
    std::string listing;
    for (const auto& l : lines) listing += l + '\n';
    return git_blob_hash(listing);
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
    nlohmann::ordered_json j;
    j["command"] = manifest.command;
    j["arguments"] = manifest.arguments;
    j["seed"] = manifest.config.seed;
    nlohmann::ordered_json config;
    for (const auto& [key, value] : config_entries(manifest.config)) config[key] = value;
    j["config"] = config;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
    for (const auto& p : manifest.inputs)
        inputs.push_back({{"path", p.generic_string()}, {"hash", content_hash(p)}});
    j["inputs"] = inputs;
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << j.dump(2) << '\n';
}

} // namespace mme
