#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gada/tensor.hpp"

namespace gada {

/// Binary checkpoint: magic "GADA", u32 version, then one record per tensor:
/// u32 name length, name bytes, u32 rank, u32 dims[rank], little-endian f64
/// payload. Records run to end of file; order is preserved.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, const Tensor*>>& entries);

std::vector<std::pair<std::string, Tensor>> load_checkpoint(
    const std::string& path);

}  // namespace gada
