#include "missa/rng.hpp"

namespace missa {

namespace {
constexpr std::uint64_t splitmix(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id,
                          StreamPurpose purpose) noexcept {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ stream_id);
  h = splitmix(h ^ static_cast<std::uint64_t>(purpose));
  return h;
}

}  // namespace missa
