#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "obstacle_walk/environment.hpp"

namespace obstacle_walk {

inline constexpr int kEnvFormatVersion = 1;

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

/// File layout: the line "OBSWALK-ENV", one line of JSON header, then the
/// occupancy payload. Payload bit k (row-major site index) is bit k % 8 of
/// byte k / 8; a set bit marks an obstacle. The header carries the payload
/// length and its FNV-1a checksum as 16 lowercase hex digits.
std::string serialize_environment(const EnvironmentField& env);
EnvironmentField deserialize_environment(std::string_view bytes);

void save_environment(const EnvironmentField& env, const std::string& path);
EnvironmentField load_environment(const std::string& path);

}  // namespace obstacle_walk
