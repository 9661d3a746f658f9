#pragma once

namespace gada {

/// Library version, recorded in run manifests. Keep in step with the CMake
/// project version.
inline constexpr const char* kVersion = "0.1.0";

}  // namespace gada
