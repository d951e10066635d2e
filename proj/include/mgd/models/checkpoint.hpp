#pragma once

#include "mgd/core/manifest.hpp"
#include "mgd/models/network.hpp"

#include <filesystem>

namespace mgd::models {

inline constexpr const char* kParameterBlobName = "params.bin";
inline constexpr const char* kCheckpointManifestName = "manifest.txt";

/// Writes `dir/params.bin` (float32 values of every parameter in declaration order) and
/// `dir/manifest.txt` (architecture, n_classes, width, mid_blocks, seed, param_count, param_hash).
/// Extra entries are appended to the manifest verbatim.
void save_checkpoint(const SegmentationNetwork& net, const std::filesystem::path& dir, const Manifest& extra = {});

/// Rebuilds the network from the manifest and verifies the stored parameter hash.
std::unique_ptr<SegmentationNetwork> load_checkpoint(const std::filesystem::path& dir);

Manifest read_checkpoint_manifest(const std::filesystem::path& dir);

} // namespace mgd::models
