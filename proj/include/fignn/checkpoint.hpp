#pragma once

#include "fignn/model.hpp"
#include "fignn/parameters.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fignn::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Container layout: "FIGNNCKP", u32 version, u64 manifest length, JSON manifest,
/// then every tensor as little-endian float64 in manifest order. All integers LE.
struct Checkpoint {
    ModelConfig model;
    std::vector<std::string> field_names;
    std::string vocab_hash;  // hex FNV-1a 64 of the vocabulary file bytes
    std::string vocab_path;
    nlohmann::json training = nlohmann::json::object();
    ParameterStore parameters;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t h);
std::string read_file(const std::filesystem::path& path);

}  // namespace fignn::io
