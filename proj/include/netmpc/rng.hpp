#pragma once

#include <cstdint>

namespace netmpc {

// Stateless mixer; feeding the output back in yields the splitmix64 stream.
// Used both for stream splitting (seed, stream id) and as the per-channel
// generator, so realizations depend only on the seed values.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_stream(uint64_t seed, uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

}  // namespace netmpc
