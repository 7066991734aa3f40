#include "mme/checkpoint.hpp"

#include <boost/beast/core/detail/base64.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mme {

namespace {

namespace base64 = boost::beast::detail::base64;

std::vector<std::size_t> parse_shape(const std::string& text, std::size_t line) {
    std::vector<std::size_t> shape;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, 'x');) {
        std::size_t used = 0;
        unsigned long long d = 0;
        try {
            d = std::stoull(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size() || d == 0)
            throw CheckpointError("line " + std::to_string(line) + ": malformed shape '" + text + "'");
        shape.push_back(static_cast<std::size_t>(d));
    }
    if (shape.empty()) throw CheckpointError("line " + std::to_string(line) + ": empty shape");
    return shape;
}

} // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(base64::encoded_size(bytes.size()), '\0');
    out.resize(base64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw CheckpointError("base64 length not a multiple of 4");
    const std::size_t body = text.find_last_not_of('=') + 1;
    if (text.size() - body > 2) throw CheckpointError("invalid base64 padding");
    std::vector<std::uint8_t> out(base64::decoded_size(text.size()));
    const auto [written, read] = base64::decode(out.data(), text.data(), body);
    if (read != body) throw CheckpointError("invalid base64 character");
    out.resize(written);
    return out;
}

void write_checkpoint(const ParameterSet& params, std::ostream& out) {
    out << kCheckpointHeader << '\n';
    std::vector<std::uint8_t> bytes;
    for (const auto& [path, t] : params) {
        if (path.empty() || path.find_first_of(" \t\n") != std::string::npos)
            throw CheckpointError("parameter path must be non-empty without whitespace: '" + path + "'");
        bytes.resize(t.size() * 8);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto bits = std::bit_cast<std::uint64_t>(t[i]);
            for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
        }
        std::string shape;
        for (std::size_t i = 0; i < t.shape().size(); ++i) shape += (i ? "x" : "") + std::to_string(t.shape()[i]);
        out << path << ' ' << shape << ' ' << base64_encode(bytes) << '\n';
    }
}

ParameterSet read_checkpoint(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointHeader)
        throw CheckpointError("line 1: missing '" + std::string(kCheckpointHeader) + "' header");
    ParameterSet params;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string path, shape_text, payload;
        if (!(ss >> path >> shape_text >> payload))
            throw CheckpointError("line " + std::to_string(line_no) + ": expected 'path shape data'");
        auto shape = parse_shape(shape_text, line_no);
        auto bytes = base64_decode(payload);
        std::size_t count = 1;
        for (auto d : shape) count *= d;
        if (bytes.size() != count * 8)
            throw CheckpointError("line " + std::to_string(line_no) + ": payload size does not match shape");
        std::vector<double> values(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
            values[i] = std::bit_cast<double>(bits);
        }
        if (params.contains(path)) throw CheckpointError("line " + std::to_string(line_no) + ": duplicate path " + path);
        params.add(path, Tensor(std::move(shape), std::move(values)));
    }
    return params;
}

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write " + path.string());
    write_checkpoint(params, out);
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("missing checkpoint " + path.string());
    return read_checkpoint(in);
}

} // namespace mme
