#pragma once

#include <cstdint>
#include <string>

#include "dcast/params.hpp"

namespace dcast {

/// FNV-1a over a config descriptor string. Model files embed this so a
/// mismatched architecture refuses to load instead of silently mis-mapping
/// weights.
std::uint64_t fingerprint(const std::string& descriptor);

/// Versioned binary parameter file: magic, version, kind tag, fingerprint,
/// then named tensors. Native (little-endian) byte order.
void save_params(const std::string& path, const std::string& kind, std::uint64_t fp,
                 const nn::NetworkParams& params);

/// Loads into an already-built network. Throws IoError on magic/version/kind/
/// fingerprint mismatch or on any layout difference from the file.
void load_params(const std::string& path, const std::string& kind, std::uint64_t fp,
                 nn::NetworkParams& params);

}  // namespace dcast
