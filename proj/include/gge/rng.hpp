#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace gge {

std::uint64_t splitmix64(std::uint64_t& state);

// One independent random stream, fully determined by (seed, stream).
// Streams with different indices are decorrelated by splitmix64 seeding.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    double uniform();            // [0, 1)
    double uniform_open();       // (0, 1)
    double normal();
    double gamma(double shape, double scale);
    // log of a Gamma(shape, 1) variate; stable for very small shapes.
    double log_gamma_variate(double shape);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace gge
