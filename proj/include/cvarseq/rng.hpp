#pragma once

#include <cstdint>
#include <random>

namespace cvarseq {

// Reproducibility contract: all sampling uses std::mt19937_64 (bit-exact
// across platforms by the standard) and uniform doubles are produced as
// (x >> 11) * 2^-53. std::uniform_real_distribution is implementation
// defined and must not be used anywhere in the engine.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform double in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    std::uint64_t next_u64() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

// splitmix64, used to derive independent per-rollout seeds from a base seed.
inline std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace cvarseq
