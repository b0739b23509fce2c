#pragma once

#include <algorithm>
#include <atomic>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "evolab/analysis.hpp"
#include "evolab/rng.hpp"

namespace evolab {

enum class Selection { truncation, tournament };

struct EvolutionParams {
    std::size_t population_size = 20;
    std::size_t parent_count = 4;     // truncation scheme
    std::size_t tournament_size = 7;  // tournament scheme
    double mutation_prob = 0.2;
    Selection selection = Selection::truncation;
    double crossover_rate = 0.9;      // tournament scheme; the rest are copies
    std::uint64_t generation_cap = 100'000'000;
    double termination_value = 1.0;   // working <=> fitness >= termination_value
    bool keep_parents = false;        // truncation scheme: copy the elite forward unchanged
    bool record_trace = false;

    void validate() const {
        if (population_size == 0) throw std::invalid_argument("population_size must be positive");
        if (generation_cap == 0) throw std::invalid_argument("generation_cap must be >= 1");
        if (mutation_prob < 0.0 || mutation_prob > 1.0) throw std::invalid_argument("mutation_prob must lie in [0,1]");
        if (crossover_rate < 0.0 || crossover_rate > 1.0) throw std::invalid_argument("crossover_rate must lie in [0,1]");
        if (selection == Selection::truncation) {
            if (parent_count == 0 || parent_count > population_size)
                throw std::invalid_argument("parent_count must lie in [1, population_size]");
            if (keep_parents && parent_count >= population_size)
                throw std::invalid_argument("keep_parents needs parent_count < population_size");
        } else if (tournament_size == 0 || tournament_size > population_size) {
            throw std::invalid_argument("tournament_size must lie in [1, population_size]");
        }
    }
};

// What the engine needs from a problem. A context is drawn once per
// generation and shared by every fitness evaluation in that generation
// (the sorting system's fresh lists live there; most systems use an empty one).
template <class S>
concept EvolvableSystem = requires(S const& s, Rng& rng, typename S::genome_type& g,
                                   typename S::genome_type const& cg,
                                   typename S::context_type const& ctx, double p) {
    { s.make_context(rng) } -> std::same_as<typename S::context_type>;
    { s.random_genome(rng) } -> std::same_as<typename S::genome_type>;
    { s.fitness(cg, ctx) } -> std::convertible_to<double>;
    { s.crossover(cg, cg, rng) } -> std::same_as<std::pair<typename S::genome_type, typename S::genome_type>>;
    { s.mutate(g, p, rng) };
};

struct EmptyContext {};

template <class Genome>
struct EvolutionOutcome {
    std::uint64_t generations = 0;
    bool succeeded = false;
    double best_fitness = 0.0;
    Genome best_genome{};
    std::vector<double> best_trace;  // per generation, when requested

    bool operator==(EvolutionOutcome const&) const = default;
};

template <class Genome>
struct RunSummary {
    std::size_t evolutions = 0;
    std::optional<double> median_generations;  // over successes; absent when all failed
    std::size_t failures = 0;
    std::vector<EvolutionOutcome<Genome>> per_evolution;

    bool operator==(RunSummary const&) const = default;
};

// Indices of the k fittest; ties at the cut are broken uniformly at random.
inline std::vector<std::size_t> truncation_select(std::span<const double> fitness, std::size_t k, Rng& rng) {
    if (fitness.empty()) throw std::invalid_argument("truncation_select: empty population");
    if (k > fitness.size()) throw std::invalid_argument("truncation_select: k exceeds population size");
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    order.resize(k);
    return order;
}

// Draws `size` contestants with replacement and returns the fittest; ties
// among the drawn contestants are broken uniformly.
inline std::size_t tournament_select(std::span<const double> fitness, std::size_t size, Rng& rng) {
    std::size_t best = rng.below(fitness.size());
    std::size_t ties = 1;
    for (std::size_t i = 1; i < size; ++i) {
        std::size_t c = rng.below(fitness.size());
        if (fitness[c] > fitness[best]) {
            best = c;
            ties = 1;
        } else if (fitness[c] == fitness[best]) {
            ++ties;
            if (rng.below(ties) == 0) best = c;
        }
    }
    return best;
}

template <EvolvableSystem S>
std::vector<typename S::genome_type> next_generation(std::span<const typename S::genome_type> population,
                                                     std::span<const double> fitness,
                                                     EvolutionParams const& params, S const& system, Rng& rng) {
    using Genome = typename S::genome_type;
    std::vector<Genome> next;
    next.reserve(params.population_size + 1);

    if (params.selection == Selection::truncation) {
        auto elite = truncation_select(fitness, params.parent_count, rng);
        if (params.keep_parents)
            for (auto i : elite) next.push_back(population[i]);
        while (next.size() < params.population_size) {
            std::size_t ia = rng.below(elite.size());
            std::size_t ib = ia;
            if (elite.size() > 1) {
                ib = rng.below(elite.size() - 1);
                if (ib >= ia) ++ib;
            }
            std::size_t a = elite[ia];
            std::size_t b = elite[ib];
            auto [c1, c2] = system.crossover(population[a], population[b], rng);
            system.mutate(c1, params.mutation_prob, rng);
            next.push_back(std::move(c1));
            if (next.size() < params.population_size) {
                system.mutate(c2, params.mutation_prob, rng);
                next.push_back(std::move(c2));
            }
        }
    } else {
        while (next.size() < params.population_size) {
            std::size_t a = tournament_select(fitness, params.tournament_size, rng);
            if (rng.chance(params.crossover_rate)) {
                std::size_t b = tournament_select(fitness, params.tournament_size, rng);
                auto [c1, c2] = system.crossover(population[a], population[b], rng);
                system.mutate(c1, params.mutation_prob, rng);
                next.push_back(std::move(c1));
                if (next.size() < params.population_size) {
                    system.mutate(c2, params.mutation_prob, rng);
                    next.push_back(std::move(c2));
                }
            } else {
                Genome child = population[a];
                system.mutate(child, params.mutation_prob, rng);
                next.push_back(std::move(child));
            }
        }
    }
    return next;
}

/// One evolution: a random generation 0, then generational replacement
/// until some individual's fitness reaches the termination value or the
/// generation cap is hit. `planted` genomes replace the first entries of
/// generation 0.
template <EvolvableSystem S>
EvolutionOutcome<typename S::genome_type> evolve(S const& system, EvolutionParams const& params,
                                                 std::uint64_t seed,
                                                 std::span<const typename S::genome_type> planted = {}) {
    using Genome = typename S::genome_type;
    params.validate();
    Rng rng(seed);

    std::vector<Genome> population;
    population.reserve(params.population_size);
    for (std::size_t i = 0; i < params.population_size; ++i)
        population.push_back(i < planted.size() ? planted[i] : system.random_genome(rng));

    EvolutionOutcome<Genome> out;
    std::vector<double> fitness(params.population_size);
    for (std::uint64_t gen = 0;; ++gen) {
        auto ctx = system.make_context(rng);
        std::size_t best = 0;
        for (std::size_t i = 0; i < population.size(); ++i) {
            fitness[i] = static_cast<double>(system.fitness(population[i], ctx));
            if (fitness[i] > fitness[best]) best = i;
        }
        if (params.record_trace) out.best_trace.push_back(fitness[best]);
        bool working = fitness[best] >= params.termination_value;
        if (working || gen == params.generation_cap) {
            out.generations = gen;
            out.succeeded = working;
            out.best_fitness = fitness[best];
            out.best_genome = population[best];
            return out;
        }
        population = next_generation<S>(population, fitness, params, system, rng);
    }
}

/// A run: `n_evolutions` independent evolutions, evolution i seeded with
/// split_seed(master_seed, i). Results are merged by index, so the summary
/// does not depend on `jobs`.
template <EvolvableSystem S>
RunSummary<typename S::genome_type> run(S const& system, EvolutionParams const& params, std::size_t n_evolutions,
                                        std::uint64_t master_seed, std::size_t jobs = 1) {
    using Genome = typename S::genome_type;
    if (n_evolutions == 0) throw std::invalid_argument("run: n_evolutions must be >= 1");
    params.validate();

    RunSummary<Genome> summary;
    summary.evolutions = n_evolutions;
    summary.per_evolution.resize(n_evolutions);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n_evolutions; i = next++)
            summary.per_evolution[i] = evolve(system, params, split_seed(master_seed, i));
    };
    jobs = std::clamp<std::size_t>(jobs, 1, n_evolutions);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    std::vector<double> gens;
    for (auto const& o : summary.per_evolution) {
        if (o.succeeded)
            gens.push_back(static_cast<double>(o.generations));
        else
            ++summary.failures;
    }
    if (!gens.empty()) summary.median_generations = median(gens);
    return summary;
}

} // namespace evolab
