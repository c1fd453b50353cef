#pragma once

#include <cstdint>
#include <random>

namespace responsivity::detail {

// std::uniform_real_distribution differs between standard libraries, so the
// conversions are done by hand to keep seeded output identical across builds.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    // [0, n)
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

private:
    std::mt19937_64 engine_;
};

} // namespace responsivity::detail
