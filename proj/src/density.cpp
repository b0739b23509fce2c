#include "evolab/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

namespace evolab {

std::string_view method_name(DensityMethod method) {
    switch (method) {
    case DensityMethod::monte_carlo: return "monte_carlo";
    case DensityMethod::analytic: return "analytic";
    case DensityMethod::enumeration: return "enumeration";
    }
    return "?";
}

DensityEstimate DensityEstimate::from_counts(std::uint64_t hits, std::uint64_t samples, DensityMethod method) {
    DensityEstimate e;
    e.method = method;
    e.hits = hits;
    e.samples = samples;
    e.density = samples ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0;
    if (method == DensityMethod::monte_carlo && samples)
        e.std_error = std::sqrt(e.density * (1.0 - e.density) / static_cast<double>(samples));
    return e;
}

double sphere_volume(int n, double r) {
    if (n < 1) throw std::invalid_argument("sphere_volume: n must be >= 1");
    if (r < 0.0) throw std::invalid_argument("sphere_volume: r must be >= 0");
    const double two_pi = 2.0 * std::numbers::pi;
    double denom = 1.0;
    if (n % 2 == 0) {
        for (int k = 2; k <= n; k += 2) denom *= k;
        return std::pow(two_pi, n / 2) * std::pow(r, n) / denom;
    }
    for (int k = 1; k <= n; k += 2) denom *= k;
    return 2.0 * std::pow(two_pi, (n - 1) / 2) * std::pow(r, n) / denom;
}

namespace {

void check_termination(double t) {
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("termination must lie in (0, 1)");
}

} // namespace

DensityEstimate gaussian_density(int n, double t) {
    check_termination(t);
    double r = std::sqrt(-std::log(t));
    DensityEstimate e;
    e.method = DensityMethod::analytic;
    e.density = sphere_volume(n, r) / std::pow(2.0, n);
    e.approximate = r > 1.0;
    return e;
}

DensityEstimate twisted_gaussian_density(int n, double t, double scale_base) {
    if (!(scale_base > 0.0)) throw std::invalid_argument("scale_base must be positive");
    auto e = gaussian_density(n, t);
    double det = 1.0;
    double smallest = 1.0;
    for (int i = 0; i < n; ++i) {
        double s = std::pow(scale_base, i);
        det *= s;
        smallest = std::min(smallest, s);
    }
    e.density /= det;
    e.approximate = std::sqrt(-std::log(t)) / smallest > 1.0;
    return e;
}

DensityEstimate highest_density(int n, int p) {
    if (n < 1 || p < 1) throw std::invalid_argument("highest_density: n and p must be >= 1");
    DensityEstimate e;
    e.method = DensityMethod::analytic;
    e.density = std::pow(static_cast<double>(p), -n);
    return e;
}

DensityEstimate monte_carlo_density(Trial const& trial, MonteCarloOptions const& options, std::uint64_t seed) {
    if (options.target_hits < 1) throw std::invalid_argument("target_hits must be >= 1");
    if (options.max_samples < 1) throw std::invalid_argument("max_samples must be >= 1");
    if (options.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");

    const std::uint64_t batches_total = (options.max_samples + options.batch_size - 1) / options.batch_size;
    const std::size_t jobs = std::max<std::size_t>(1, options.jobs);

    std::uint64_t hits = 0;
    std::uint64_t samples = 0;
    // Offsets of the hits within each batch of the current round.
    std::vector<std::vector<std::uint64_t>> round(jobs);
    for (std::uint64_t first = 0; first < batches_total; first += jobs) {
        std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(jobs, batches_total - first));
        auto work = [&](std::size_t j) {
            std::uint64_t k = first + j;
            std::uint64_t begin = k * options.batch_size;
            std::uint64_t size = std::min(options.batch_size, options.max_samples - begin);
            Rng rng(split_seed(seed, k));
            round[j].clear();
            for (std::uint64_t i = 0; i < size; ++i)
                if (trial(rng)) round[j].push_back(i);
        };
        if (count == 1) {
            work(0);
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t j = 0; j < count; ++j) pool.emplace_back(work, j);
        }
        for (std::size_t j = 0; j < count; ++j) {
            std::uint64_t begin = (first + j) * options.batch_size;
            std::uint64_t size = std::min(options.batch_size, options.max_samples - begin);
            auto const& offs = round[j];
            if (hits + offs.size() >= options.target_hits) {
                auto last = offs[options.target_hits - hits - 1];
                return DensityEstimate::from_counts(options.target_hits, samples + last + 1,
                                                    DensityMethod::monte_carlo);
            }
            hits += offs.size();
            samples += size;
        }
    }
    if (hits == 0)
        throw ZeroDensityError(samples, 1.0 - std::pow(0.05, 1.0 / static_cast<double>(samples)));
    return DensityEstimate::from_counts(hits, samples, DensityMethod::monte_carlo);
}

std::optional<std::uint64_t> space_size(vec::IntVectorSystem const& system) {
    auto width = static_cast<std::uint64_t>(system.high() - system.low() + 1);
    std::uint64_t total = 1;
    for (int i = 0; i < system.config().n; ++i) {
        if (total > kEnumerationLimit / width + 1) return std::nullopt;
        total *= width;
    }
    return total;
}

DensityEstimate enumerate_density(vec::IntVectorSystem const& system, double termination_value) {
    auto total = space_size(system);
    if (!total || *total > kEnumerationLimit)
        throw std::invalid_argument("genome space too large to enumerate");
    const int lo = system.low();
    const int hi = system.high();
    vec::IntGenome x(static_cast<std::size_t>(system.config().n), lo);
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < *total; ++i) {
        if (system.fitness(x) >= termination_value) ++hits;
        for (auto& xi : x) {
            if (xi < hi) {
                ++xi;
                break;
            }
            xi = lo;
        }
    }
    return DensityEstimate::from_counts(hits, *total, DensityMethod::enumeration);
}

} // namespace evolab
