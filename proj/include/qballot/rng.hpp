#pragma once

#include <cstdint>
#include <random>

namespace qballot {

/// Explicitly seeded random stream. Streams are split by index so that trial k
/// always sees the same numbers no matter how trials are scheduled.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    std::uint64_t seed() const { return seed_; }

    /// Independent child stream derived from (seed, stream).
    Rng split(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x9e3779b97f4a7c15ULL))); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n);

    double normal();

    std::uint64_t next_u64() { return engine_(); }

  private:
    static std::uint64_t mix(std::uint64_t x);

    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace qballot
