#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace spectralds {

std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t state = 0xcbf29ce484222325ULL);

// Independent engine for (seed, label, index); identical inputs always give
// identical streams regardless of call order or thread.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);
std::mt19937_64 make_stream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

}  // namespace spectralds
