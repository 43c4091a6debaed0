#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace poregrad {

using Rng = std::mt19937_64;

/// Seed for a named sub-stream of a root seed. Distinct (name, index) pairs
/// give decorrelated streams; the mapping is stable across runs and builds.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0)
{
    return Rng(derive_seed(root, stream, index));
}

}  // namespace poregrad
