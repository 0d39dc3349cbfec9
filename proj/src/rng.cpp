#include "gge/rng.hpp"

#include <cmath>

namespace gge {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    std::uint64_t mixed = splitmix64(s) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    std::uint32_t words[8];
    for (int i = 0; i < 4; ++i) {
        std::uint64_t w = splitmix64(mixed);
        words[2 * i] = static_cast<std::uint32_t>(w);
        words[2 * i + 1] = static_cast<std::uint32_t>(w >> 32);
    }
    std::seed_seq seq(std::begin(words), std::end(words));
    return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

double Rng::uniform() {
    return std::generate_canonical<double, 53>(engine_);
}

double Rng::uniform_open() {
    double u;
    do {
        u = uniform();
    } while (u <= 0.0);
    return u;
}

double Rng::normal() { return normal_(engine_); }

double Rng::gamma(double shape, double scale) {
    std::gamma_distribution<double> g(shape, scale);
    return g(engine_);
}

double Rng::log_gamma_variate(double shape) {
    if (shape >= 1.0) {
        double g;
        do {
            g = gamma(shape, 1.0);
        } while (g <= 0.0);
        return std::log(g);
    }
    // G(a) = G(a + 1)·U^{1/a}, kept in log form so tiny shapes do not underflow.
    double g;
    do {
        g = gamma(shape + 1.0, 1.0);
    } while (g <= 0.0);
    return std::log(g) + std::log(uniform_open()) / shape;
}

}  // namespace gge
