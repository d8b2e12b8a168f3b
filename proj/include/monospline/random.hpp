#pragma once

#include <cstdint>
#include <random>

namespace monospline {

// Mixes a root seed with stream coordinates (SplitMix64 finalizer), so each
// replication or fold gets its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0);

// Thin wrapper over mt19937_64. All conversions to real numbers are done
// here rather than through <random> distributions, whose output is
// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // (0, 1)
    double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    // Unbiased integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    // Standard normal by inversion.
    double normal();

private:
    std::mt19937_64 engine_;
};

double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace monospline
