#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lstmdssm/error.hpp"
#include "lstmdssm/parameters.hpp"

namespace lstmdssm {

inline constexpr char kCheckpointMagic[8] = {'L', 'S', 'T', 'M', 'D', 'S', 'S', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Trained model state plus the identity of the vocabulary it was built on.
struct Checkpoint {
    ModelDims dims;
    double gamma = 1.0;
    std::string vocab_hash;  // hex SHA-256 of the vocabulary file
    std::size_t vocab_dimension = 0;
    LstmParameters params;
    std::optional<Velocity> velocity;
    std::uint64_t step = 0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

class CheckpointError : public Error {
  public:
    enum class Kind { Io, BadMagic, UnsupportedVersion, BadHeader, Shape, HashMismatch };

    CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

/// Layout, all integers and floats little-endian:
///   8 bytes   magic "LSTMDSSM"
///   4 bytes   format version
///   4 bytes   header length H
///   H bytes   UTF-8 JSON header (dims, gamma, step, vocabulary hash,
///             array manifest with byte offsets into the array block)
///   ...       float64 arrays, row-major, parameters then optional velocity
///   32 bytes  SHA-256 of every preceding byte
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lstmdssm
