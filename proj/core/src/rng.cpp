#include "spectralds/rng.hpp"

namespace spectralds {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t state) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    state ^= bytes[i];
    state *= 0x100000001b3ULL;
  }
  return state;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void append_le(std::uint64_t value, unsigned char* out) {
  for (int b = 0; b < 8; ++b) out[b] = static_cast<unsigned char>(value >> (8 * b));
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  unsigned char buf[8];
  append_le(seed, buf);
  std::uint64_t h = fnv1a64(buf, sizeof buf);
  h = fnv1a64(label.data(), label.size(), h);
  append_le(index, buf);
  h = fnv1a64(buf, sizeof buf, h);
  return splitmix64(h);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  return std::mt19937_64(stream_seed(seed, label, index));
}

}  // namespace spectralds
