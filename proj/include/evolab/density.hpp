#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "evolab/errors.hpp"
#include "evolab/rng.hpp"
#include "evolab/vector_systems.hpp"

namespace evolab {

enum class DensityMethod { monte_carlo, analytic, enumeration };
std::string_view method_name(DensityMethod method);

struct DensityEstimate {
    double density = 0.0;
    DensityMethod method = DensityMethod::analytic;
    std::optional<std::uint64_t> hits;     // sampled and enumerated estimates
    std::optional<std::uint64_t> samples;
    double std_error = 0.0;
    bool approximate = false;  // analytic value outside its exact regime

    static DensityEstimate from_counts(std::uint64_t hits, std::uint64_t samples, DensityMethod method);
};

// Volume of the n-ball of radius r, by the even/odd product formulas.
double sphere_volume(int n, double r);

// Fraction of [-1,1)^n where exp(-|x|^2) >= t. Flagged approximate when the
// ball leaves the cube.
DensityEstimate gaussian_density(int n, double t);
// Same with |S Q x| in place of |x|; the flag uses the radius along the
// least-scaled axis.
DensityEstimate twisted_gaussian_density(int n, double t, double scale_base = 1.5);
DensityEstimate highest_density(int n, int p);

struct MonteCarloOptions {
    std::uint64_t target_hits = 1000;
    std::uint64_t max_samples = 100'000'000;
    std::uint64_t batch_size = 4096;
    std::size_t jobs = 1;
};

// One random draw; true when the drawn genome works.
using Trial = std::function<bool(Rng&)>;

/// Draws until target_hits working samples or max_samples draws. Batch k
/// uses split_seed(seed, k) and batches are merged in index order, so the
/// result does not depend on `jobs`. Throws ZeroDensityError when nothing
/// was found.
DensityEstimate monte_carlo_density(Trial const& trial, MonteCarloOptions const& options, std::uint64_t seed);

template <class S>
Trial working_trial(S const& system, double termination_value) {
    return [&system, termination_value](Rng& rng) {
        auto genome = system.random_genome(rng);
        auto ctx = system.make_context(rng);
        return static_cast<double>(system.fitness(genome, ctx)) >= termination_value;
    };
}

constexpr std::uint64_t kEnumerationLimit = 10'000'000;

// Exact density over every point of an integer vector space; throws
// std::invalid_argument above kEnumerationLimit points.
DensityEstimate enumerate_density(vec::IntVectorSystem const& system, double termination_value);
std::optional<std::uint64_t> space_size(vec::IntVectorSystem const& system);

} // namespace evolab
