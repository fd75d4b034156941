#include "lstmdssm/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "lstmdssm/digest.hpp"

namespace lstmdssm {

namespace {

using Kind = CheckpointError::Kind;
using nlohmann::json;

constexpr std::size_t kPreambleSize = 16;
constexpr std::size_t kDigestSize = 32;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

double get_f64(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

template <typename Tag>
void append_manifest(json& manifest, const std::string& prefix, const ParameterSet<Tag>& set,
                     std::uint64_t& offset) {
    for (Group g : kAllGroups) {
        const auto& t = set[g];
        manifest.push_back({{"name", prefix + std::string(group_name(g))},
                            {"rows", t.rows},
                            {"cols", t.cols},
                            {"offset", offset}});
        offset += 8 * t.size();
    }
}

template <typename Tag>
void append_arrays(std::vector<std::uint8_t>& out, const ParameterSet<Tag>& set) {
    for (Group g : kAllGroups) {
        for (double v : set[g].values) put_f64(out, v);
    }
}

// Fills set from the manifest entries starting at first, checking names and
// shapes against the dims.
template <typename Tag>
void read_arrays(const json& manifest, std::size_t first, const std::string& prefix,
                 const std::uint8_t* block, std::size_t block_size, ParameterSet<Tag>& set) {
    for (std::size_t gi = 0; gi < kGroupCount; ++gi) {
        const Group g = kAllGroups[gi];
        const auto& entry = manifest.at(first + gi);
        const auto name = prefix + std::string(group_name(g));
        auto& t = set[g];
        if (entry.at("name").get<std::string>() != name ||
            entry.at("rows").get<std::size_t>() != t.rows ||
            entry.at("cols").get<std::size_t>() != t.cols) {
            throw CheckpointError(Kind::Shape, "checkpoint: array " + name +
                                                   " does not match the stored dimensions");
        }
        const auto offset = entry.at("offset").get<std::uint64_t>();
        if (offset > block_size || (block_size - offset) / 8 < t.size()) {
            throw CheckpointError(Kind::Shape, "checkpoint: array " + name + " out of bounds");
        }
        for (std::size_t k = 0; k < t.size(); ++k) t[k] = get_f64(block + offset + 8 * k);
    }
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& cp) {
    if (cp.params.dims() != cp.dims) {
        throw CheckpointError(Kind::Shape, "checkpoint: parameter shapes do not match dims");
    }
    if (cp.velocity && cp.velocity->dims() != cp.dims) {
        throw CheckpointError(Kind::Shape, "checkpoint: velocity shapes do not match dims");
    }

    json manifest = json::array();
    std::uint64_t offset = 0;
    append_manifest(manifest, "", cp.params, offset);
    if (cp.velocity) append_manifest(manifest, "velocity.", *cp.velocity, offset);

    const json header = {
        {"dims", {{"input_dim", cp.dims.input_dim}, {"ncell", cp.dims.ncell}}},
        {"gamma", cp.gamma},
        {"step", cp.step},
        {"vocabulary", {{"hash", cp.vocab_hash}, {"dimension", cp.vocab_dimension}}},
        {"has_velocity", cp.velocity.has_value()},
        {"arrays", manifest},
        {"array_bytes", offset},
    };
    const std::string header_text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(kPreambleSize + header_text.size() + offset + kDigestSize);
    out.insert(out.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.insert(out.end(), header_text.begin(), header_text.end());
    append_arrays(out, cp.params);
    if (cp.velocity) append_arrays(out, *cp.velocity);

    const auto digest = sha256(out);
    out.insert(out.end(), digest.begin(), digest.end());
    return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kPreambleSize) {
        throw CheckpointError(Kind::Shape, "checkpoint: file truncated before header");
    }
    if (!std::equal(std::begin(kCheckpointMagic), std::end(kCheckpointMagic), bytes.begin(),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
        throw CheckpointError(Kind::BadMagic, "checkpoint: bad magic");
    }
    const auto version = get_u32(bytes.data() + 8);
    if (version != kCheckpointVersion) {
        throw CheckpointError(Kind::UnsupportedVersion,
                              "checkpoint: unsupported format version " + std::to_string(version));
    }
    const std::size_t header_len = get_u32(bytes.data() + 12);
    if (bytes.size() < kPreambleSize + header_len) {
        throw CheckpointError(Kind::Shape, "checkpoint: file truncated inside header");
    }

    json header;
    try {
        header = json::parse(bytes.begin() + kPreambleSize,
                             bytes.begin() + static_cast<std::ptrdiff_t>(kPreambleSize + header_len));
    } catch (const json::exception& e) {
        throw CheckpointError(Kind::BadHeader, std::string("checkpoint: bad header: ") + e.what());
    }

    try {
        const auto array_bytes = header.at("array_bytes").get<std::uint64_t>();
        const std::uint64_t expected = kPreambleSize + header_len + array_bytes + kDigestSize;
        if (bytes.size() != expected) {
            throw CheckpointError(Kind::Shape, "checkpoint: size " + std::to_string(bytes.size()) +
                                                   " bytes, header implies " +
                                                   std::to_string(expected));
        }
        const std::size_t body = bytes.size() - kDigestSize;
        const auto digest = sha256({bytes.data(), body});
        if (!std::equal(digest.begin(), digest.end(), bytes.begin() + static_cast<std::ptrdiff_t>(body))) {
            throw CheckpointError(Kind::HashMismatch, "checkpoint: content hash mismatch");
        }

        Checkpoint cp;
        cp.dims.input_dim = header.at("dims").at("input_dim").get<std::size_t>();
        cp.dims.ncell = header.at("dims").at("ncell").get<std::size_t>();
        if (!cp.dims.valid()) throw CheckpointError(Kind::Shape, "checkpoint: invalid dims");
        cp.gamma = header.at("gamma").get<double>();
        cp.step = header.at("step").get<std::uint64_t>();
        cp.vocab_hash = header.at("vocabulary").at("hash").get<std::string>();
        cp.vocab_dimension = header.at("vocabulary").at("dimension").get<std::size_t>();
        if (cp.vocab_dimension != cp.dims.input_dim) {
            throw CheckpointError(Kind::Shape,
                                  "checkpoint: vocabulary dimension differs from input_dim");
        }
        const bool has_velocity = header.at("has_velocity").get<bool>();
        const auto& manifest = header.at("arrays");
        if (manifest.size() != kGroupCount * (has_velocity ? 2 : 1)) {
            throw CheckpointError(Kind::Shape, "checkpoint: wrong number of arrays");
        }

        const std::uint8_t* block = bytes.data() + kPreambleSize + header_len;
        cp.params = LstmParameters(cp.dims);
        read_arrays(manifest, 0, "", block, array_bytes, cp.params);
        if (has_velocity) {
            cp.velocity = Velocity(cp.dims);
            read_arrays(manifest, kGroupCount, "velocity.", block, array_bytes, *cp.velocity);
        }
        return cp;
    } catch (const json::exception& e) {
        throw CheckpointError(Kind::BadHeader, std::string("checkpoint: bad header: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    const auto bytes = serialize_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(Kind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError(Kind::Io, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(Kind::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace lstmdssm
