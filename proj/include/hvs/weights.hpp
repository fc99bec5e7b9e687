#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hvs/network.hpp"

namespace hvs {

inline constexpr std::uint32_t kWeightsVersion = 1;

/// Layout (little-endian):
///   "HVSW" | u32 version | u32 len + descriptor text |
///   per tensor: u32 len + name | u32 rank | u32 dims[rank] | f32 values
/// The descriptor holds the architecture lines and a `meta` line.
std::vector<unsigned char> encode_weights(const PolicyModel& model);
PolicyModel decode_weights(std::span<const unsigned char> bytes);

void save_weights(const std::filesystem::path& path, const PolicyModel& model);
PolicyModel load_weights(const std::filesystem::path& path);

}  // namespace hvs
