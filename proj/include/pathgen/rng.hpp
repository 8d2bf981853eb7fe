#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pathgen/error.hpp"

namespace pathgen {

// splitmix64 finalizer; used to derive independent child seeds so that
// parallel and serial runs produce byte-identical results.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t child_seed(uint64_t seed, uint64_t index) {
    return mix64(seed ^ mix64(index + 1));
}

// Deterministic random stream. mt19937_64 is fully specified by the
// standard; the bounded/real draws below deliberately avoid
// std::uniform_*_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform in [0, n); n must be positive
    uint64_t uniform_int(uint64_t n) {
        if (n == 0) throw Error("Rng::uniform_int: empty range");
        return next_u64() % n;
    }

    // uniform in [0, 1)
    double uniform_real() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform_range(double lo, double hi) {
        return lo + (hi - lo) * uniform_real();
    }

private:
    std::mt19937_64 gen_;
};

// Fisher-Yates with our own bounded draw (std::shuffle is unspecified).
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_int(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace pathgen
