#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace atv {

/// mt19937_64 with hand-rolled real conversions, so sequences do not depend on
/// the standard library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform on (0, 1], safe for log().
    double uniform_open() { return 1.0 - uniform(); }
    double exponential() { return -std::log(uniform_open()); }
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }
    bool coin(double p = 0.5) { return uniform() < p; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace atv
