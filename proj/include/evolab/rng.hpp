#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace evolab {

// SplitMix64 finalizer. Used to derive independent per-evolution and
// per-shard seeds from a master seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed of stream `index` under `master`. Streams are independent of the
// order in which they are consumed.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

/// Seeded random source: MT19937-64 underneath, with bounded-integer and
/// real draws implemented here (rather than via std distributions) so that
/// a seed produces the same stream with every standard library.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return engine_(); }

    // Uniform in [0, n). n must be > 0. Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) {
        auto m = static_cast<unsigned __int128>(engine_()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(engine_()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Uniform in [0, 1) on the 2^-53 grid.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi); hi itself is never produced.
    double uniform(double lo, double hi) {
        double x = lo + (hi - lo) * uniform();
        return x < hi ? x : lo;
    }

    bool chance(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace evolab
