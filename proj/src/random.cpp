#include "monospline/random.hpp"

#include <boost/math/distributions/normal.hpp>

#include <stdexcept>

namespace monospline {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

const boost::math::normal_distribution<double>& standard_normal() {
    static const boost::math::normal_distribution<double> dist(0.0, 1.0);
    return dist;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return splitmix(splitmix(splitmix(root) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below needs a positive bound");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    for (;;) {
        const std::uint64_t v = next();
        if (v < limit) return v % bound;
    }
}

double Rng::normal() { return normal_quantile(uniform_open()); }

double normal_cdf(double x) { return boost::math::cdf(standard_normal(), x); }

double normal_quantile(double p) { return boost::math::quantile(standard_normal(), p); }

}  // namespace monospline
