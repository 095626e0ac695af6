#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace eqf {

/// One stream per (seed, purpose, index): Monte Carlo runs draw from their own streams, so the
/// results do not depend on the order in which workers pick them up.
std::mt19937_64 substream(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0);

std::uint64_t splitmix64(std::uint64_t x);
/// FNV-1a over bytes.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace eqf
