#pragma once

#include <cmath>
#include <cstdint>

namespace tdlab {

// SplitMix64 (Steele, Lea & Flood, "Fast splittable pseudorandom number
// generators", OOPSLA 2014). One 64-bit word of state, identical output on
// every platform, and cheap to fork into independent streams -- which is all
// the reproducible fixtures here need.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection-free modulo is fine: n is tiny
    // (state counts, action counts) against 2^64 so the bias is unobservable.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    double exponential() { return -std::log(1.0 - uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent child stream; distinct ids give decorrelated streams.
    Rng split(std::uint64_t stream_id) const {
        Rng mix(state_ ^ (0xA0761D6478BD642FULL * (stream_id + 1)));
        mix.next_u64();
        return Rng(mix.next_u64());
    }

  private:
    std::uint64_t state_;
};

}  // namespace tdlab
