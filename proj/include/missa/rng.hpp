#pragma once

#include <cstdint>
#include <random>

namespace missa {

// Stream purposes; mixed into the derived seed so that transition and noise
// draws of one chain never share a generator.
enum class StreamPurpose : std::uint64_t {
  Transition = 1,
  Noise = 2,
  Auxiliary = 3,
};

// splitmix64 finalizer over (seed, stream id, purpose).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id,
                          StreamPurpose purpose) noexcept;

// Deterministic random stream owned by exactly one consumer (one chain).
// Not thread-safe; distinct streams may be used concurrently.
class RandomStream {
 public:
  RandomStream() : RandomStream(0, 0, StreamPurpose::Auxiliary) {}
  RandomStream(std::uint64_t seed, std::uint64_t stream_id,
               StreamPurpose purpose)
      : engine_(derive_seed(seed, stream_id, purpose)) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace missa
