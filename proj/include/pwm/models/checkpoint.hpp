#pragma once

#include <filesystem>
#include <string>

#include "pwm/models/models.hpp"

namespace pwm::models {

inline constexpr int kCheckpointFormatVersion = 1;

// Binary checkpoint:
//   "PWMCKPT\n"                          8-byte magic
//   u32 manifest length, manifest bytes  structured text (version, kind, dims, stats, fingerprint, extras)
//   u32 tensor count, then per tensor:
//     u32 name length, name, u8 group, u32 rank, u32 dims[rank], f32 data[prod(dims)]
// All integers and floats little-endian. Parameters are stored as 32-bit floats.
void save_checkpoint(const std::filesystem::path& path, const WorldModel& model, const std::string& extra_json = "{}");
WorldModel load_checkpoint(const std::filesystem::path& path);
// Structured-text manifest of a checkpoint file (for provenance and inspection).
std::string read_manifest(const std::filesystem::path& path);

// Rounds every parameter to the nearest 32-bit float, i.e. what a
// save/load cycle produces.
void round_to_checkpoint_precision(WorldModel& model);

}  // namespace pwm::models
