#pragma once

#include <cstdint>
#include <string>

#include "hamur/model.hpp"

namespace hamur {

// Single-file binary checkpoint, little-endian:
//   magic "HMURCKP1" | u32 format version | u64 config hash |
//   u64 record count | records of (u32 name length, name bytes,
//   u32 ndim, u64 dims..., f64 payload...).
// Records are the model's state tensors in canonical order, so a
// save/load round trip is bit-exact including running statistics.

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(HamurModel& model, std::uint64_t config_hash,
                     const std::string& path);

// Refuses (data_error) on a foreign magic, a version or config-hash
// mismatch (naming both values), truncation, or records that do not match
// the model's state layout.
void load_checkpoint(HamurModel& model, std::uint64_t config_hash,
                     const std::string& path);

}  // namespace hamur
