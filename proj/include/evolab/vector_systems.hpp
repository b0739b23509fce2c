#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "evolab/engine.hpp"
#include "evolab/rng.hpp"

namespace evolab::vec {

using RealGenome = std::vector<double>;
using IntGenome = std::vector<int>;

constexpr int kMaxDimensions = 32;

double gaussian_fitness(std::span<const double> x);
double linear_fitness(std::span<const double> x);
// Number of coordinates equal to p.
int highest_fitness(std::span<const int> x, int p);

// Entry i is the lowest set bit of i+1; length 2^b - 1.
std::vector<int> least_set_bit_table(int b);
int binary_fitness(std::span<const int> x, std::span<const int> table);

struct TwistedPair {
    int u = 0;
    int v = 0;
    bool operator==(TwistedPair const&) const = default;
};
TwistedPair twist_pair(int x, int y);
// Sum over consecutive pairs of table[u] + table[v]. n must be even.
int twisted_binary_fitness(std::span<const int> x, std::span<const int> table);

// Rotation by `angle` in each adjacent plane (i, i+1), applied for
// i = 0, 1, ..., n-2 in that order, then scaling of coordinate i by
// scale_base^i.
struct TwistConfig {
    double scale_base = 1.5;
    double angle = 0.7853981633974483;  // 45 degrees
};

/// The linear map x -> S Q x, stored densely.
class RotateScale {
public:
    RotateScale(std::size_t n, TwistConfig const& config = {});

    std::size_t dimension() const { return n_; }
    // Row-major n x n matrix of Q alone.
    std::vector<double> const& rotation() const { return rotation_; }
    std::vector<double> const& scales() const { return scales_; }

    std::vector<double> apply(std::span<const double> x) const;
    std::vector<double> rotate(std::span<const double> x) const;

private:
    std::size_t n_;
    std::vector<double> rotation_;
    std::vector<double> scales_;
};

std::vector<double> rotate_scale(std::span<const double> x, TwistConfig const& config = {});
double twisted_linear_fitness(std::span<const double> x, RotateScale const& map);
double twisted_gaussian_fitness(std::span<const double> x, RotateScale const& map);

// Resample one uniformly chosen coordinate.
void resample_one(RealGenome& x, Rng& rng);
void resample_one(IntGenome& x, int lo, int hi, Rng& rng);

// Single cut uniform in [1, n-1], suffixes swapped; n = 1 gives copies.
template <class T>
std::pair<std::vector<T>, std::vector<T>> vector_crossover(std::vector<T> const& a, std::vector<T> const& b,
                                                           Rng& rng) {
    std::pair<std::vector<T>, std::vector<T>> out{a, b};
    if (a.size() < 2) return out;
    auto cut = static_cast<std::ptrdiff_t>(1 + rng.below(a.size() - 1));
    std::swap_ranges(out.first.begin() + cut, out.first.end(), out.second.begin() + cut);
    return out;
}

enum class RealKind { gaussian, linear, twisted_linear, twisted_gaussian };
enum class IntKind { highest, binary, twisted_binary };

std::string_view kind_name(RealKind kind);
std::string_view kind_name(IntKind kind);

struct RealVectorConfig {
    RealKind kind = RealKind::gaussian;
    int n = 2;
    TwistConfig twist{};
    bool crossover = true;
};

/// Points of [-1,1)^n scored by a smooth function.
class RealVectorSystem {
public:
    using genome_type = RealGenome;
    using context_type = EmptyContext;

    explicit RealVectorSystem(RealVectorConfig config);

    RealVectorConfig const& config() const { return config_; }

    EmptyContext make_context(Rng&) const { return {}; }
    RealGenome random_genome(Rng& rng) const;
    double fitness(RealGenome const& x, EmptyContext const& = {}) const;
    std::pair<RealGenome, RealGenome> crossover(RealGenome const& a, RealGenome const& b, Rng& rng) const;
    // With probability p one coordinate is redrawn.
    void mutate(RealGenome& x, double p, Rng& rng) const;

private:
    RealVectorConfig config_;
    RotateScale map_;
};

struct IntVectorConfig {
    IntKind kind = IntKind::highest;
    int n = 2;
    int p = 50;  // highest
    int b = 3;   // binary systems
    bool crossover = true;
};

/// Integer vectors: coordinates in [1,p] (highest) or [0, 2^b - 2] (binary).
class IntVectorSystem {
public:
    using genome_type = IntGenome;
    using context_type = EmptyContext;

    explicit IntVectorSystem(IntVectorConfig config);

    IntVectorConfig const& config() const { return config_; }
    int low() const { return lo_; }
    int high() const { return hi_; }
    // Largest fitness any genome reaches.
    double max_fitness() const;

    EmptyContext make_context(Rng&) const { return {}; }
    IntGenome random_genome(Rng& rng) const;
    double fitness(IntGenome const& x, EmptyContext const& = {}) const;
    std::pair<IntGenome, IntGenome> crossover(IntGenome const& a, IntGenome const& b, Rng& rng) const;
    void mutate(IntGenome& x, double p, Rng& rng) const;

private:
    IntVectorConfig config_;
    int lo_ = 0;
    int hi_ = 0;
    std::vector<int> table_;
};

} // namespace evolab::vec
