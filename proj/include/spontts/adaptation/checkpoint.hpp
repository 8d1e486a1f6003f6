#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spontts/model/model.hpp"
#include "spontts/numerics/adam.hpp"

namespace spontts {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kCheckpointManifest = "manifest.json";
inline constexpr const char* kCheckpointBlob = "params.bin";

struct TensorEntry {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::uint64_t offset = 0;  // bytes into params.bin
    std::uint64_t bytes = 0;
    std::string sha256;
};

struct CheckpointManifest {
    int format_version = kCheckpointFormatVersion;
    std::vector<TensorEntry> tensors;    // model parameters, registration order
    std::vector<TensorEntry> optimizer;  // adam.m.<name> / adam.v.<name>
    std::vector<std::string> stage_history;
    std::string config_hash;
    std::uint64_t seed = 0;
};

// A model plus the training context needed to resume or audit it.
struct Checkpoint {
    AcousticModel<float> model;
    AdamState<float> optimizer;
    std::vector<std::string> stage_history;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;  // filled on load
};

// Writes <dir>/manifest.json and <dir>/params.bin (float32 little endian,
// tensors back to back). Output is a pure function of the checkpoint.
CheckpointManifest save_checkpoint(const std::filesystem::path& dir, const Checkpoint& checkpoint);

// Verifies version, blob size and every tensor digest; a damaged tensor
// raises an Integrity error naming it. A non-empty `expected_config_hash`
// that differs from the stored one adds a warning.
Checkpoint load_checkpoint(const std::filesystem::path& dir, const std::string& expected_config_hash = "");

// SHA-256 of a tensor's float32 little-endian bytes.
std::string tensor_sha256(const Tensor<float>& t);
std::map<std::string, std::string> parameter_hashes(const ParameterSet<float>& params);

// SHA-256 of the canonical JSON form of a model configuration.
std::string model_config_hash(const ModelConfig& config);

// SHA-256 over manifest.json and params.bin.
std::string checkpoint_digest(const std::filesystem::path& dir);

}  // namespace spontts
