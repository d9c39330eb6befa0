#pragma once

#include <cstdint>
#include <string_view>

namespace rankml {

// XXH64 (Yann Collet's xxHash, 64-bit variant). Primitive tokens are
// xxh64(name, 0); the value must be identical across runs, machines and
// compilers, so the algorithm is spelled out here instead of relying on
// std::hash.
std::uint64_t xxh64(std::string_view data, std::uint64_t seed = 0) noexcept;

// Mixes several 64-bit values into one stream seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) noexcept;

}  // namespace rankml
