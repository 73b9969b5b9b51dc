#pragma once

#include <cstdint>
#include <random>

namespace giph {

// Portable random stream. The standard distributions are implementation
// defined, so uniform draws are derived directly from the engine bits to
// keep datasets bit-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi]; returns lo when the range is degenerate.
    double uniform(double lo, double hi) {
        if (!(hi > lo)) return lo;
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer on [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Uniform integer on [lo, hi].
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Independent child stream; the parent advances by one draw.
    Rng fork() { return Rng(mix(engine_())); }

    static std::uint64_t mix(std::uint64_t x);
    /// Deterministic seed for a named sub-stream of a base seed.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        return mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL));
    }

private:
    std::mt19937_64 engine_;
};

} // namespace giph
