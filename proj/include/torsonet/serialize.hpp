#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "torsonet/graph.hpp"

namespace torsonet {

using WarnFn = std::function<void(const std::string&)>;
void warn_to_stderr(const std::string& msg);

// Archive layout: magic "CTRW", u16 format version, length-prefixed metadata
// (num_classes, conv activation, ordered parameterized-node list with shapes),
// per-node weight+bias payloads as little-endian f32 in declaration order,
// then a CRC-32 of the payload bytes. Round-trips are bit-exact.
void save_weights(const ModelF& model, const std::filesystem::path& path);

// Rebuilds the model the archive describes. When `requested` names a
// different activation than the file, the file wins and `warn` is invoked.
ModelF load_weights(const std::filesystem::path& path,
                    std::optional<ActivationKind> requested = std::nullopt,
                    const WarnFn& warn = warn_to_stderr);

// Archive bytes that are not parameter payload (header + metadata + checksum).
std::size_t archive_overhead_bytes(const GraphTopology& topo);

std::uint32_t crc32(const unsigned char* data, std::size_t len);

}  // namespace torsonet
