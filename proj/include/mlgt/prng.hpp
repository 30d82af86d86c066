#pragma once

#include <cstdint>
#include <vector>

namespace mlgt {

// Splittable 64-bit generator (splitmix64). All randomized operations in the
// library take an explicit seed and draw from this generator only, so results
// are bit-identical across platforms and thread schedules. Do not swap in
// <random> distributions: their output is implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound). Multiply-shift; bias is < 2^-64 per draw.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    bool bernoulli(double p) { return next_double() < p; }

private:
    std::uint64_t state_;
};

// Derives an independent stream seed from (seed, tag). Used to hand each
// group/block/trial its own generator so parallel order cannot matter.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ULL + tag * 0xbf58476d1ce4e5b9ULL));
    g.next();
    return g.next();
}

template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// k distinct values from [0, n), returned sorted ascending.
std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t k,
                                                     SplitMix64& rng);

}  // namespace mlgt
