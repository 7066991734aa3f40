#pragma once

#include "mme/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mme {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kCheckpointHeader = "MME-CKPT v1";

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Text checkpoint: header line, then "path shape base64" per parameter where
/// shape is "d0xd1x..." and the payload holds little-endian IEEE-754 doubles.
void write_checkpoint(const ParameterSet& params, std::ostream& out);
ParameterSet read_checkpoint(std::istream& in);

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_checkpoint(const std::filesystem::path& path);

} // namespace mme
