#pragma once

#include "mme/config.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mme {

/// Git blob id: SHA-1 of "blob <size>\0" followed by the bytes, as hex.
std::string git_blob_hash(std::string_view bytes);
/// Blob hash of a file, or for a directory a hash over the sorted
/// "relative-path blob-hash" lines of every regular file below it.
std::string content_hash(const std::filesystem::path& path);

struct RunManifest {
    std::string command;
    std::vector<std::string> arguments;
    RunConfig config;
    std::vector<std::filesystem::path> inputs;
};

/// Writes manifest.json (command line, seed, config snapshot, input hashes) into `dir`.
void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

} // namespace mme
