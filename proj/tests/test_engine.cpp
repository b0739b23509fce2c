#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "evolab/engine.hpp"
#include "evolab/linear_gp.hpp"
#include "evolab/vector_systems.hpp"
#include "stats.hpp"

using namespace evolab;

TEST_SUITE("engine") {

TEST_CASE("truncation keeps the fittest") {
    Rng rng(1);
    std::vector<double> f{5, 4, 3, 2, 1};
    auto idx = truncation_select(f, 2, rng);
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()) == std::set<std::size_t>{0, 1});
    CHECK_THROWS_AS(truncation_select(f, 6, rng), std::invalid_argument);
    CHECK_THROWS_AS(truncation_select(std::vector<double>{}, 0, rng), std::invalid_argument);
}

TEST_CASE("truncation ties are uniform") {
    Rng rng(2);
    std::vector<double> flat(20, 1.0);
    std::vector<double> hits(20, 0.0);
    const int trials = 20000;
    for (int t = 0; t < trials; ++t)
        for (auto i : truncation_select(flat, 4, rng)) hits[i] += 1;
    for (double h : hits) CHECK(stats::binomial_z(h, trials, 0.2) < 5.0);

    std::vector<double> f{5, 4, 4, 4};
    std::vector<double> count(4, 0.0);
    for (int t = 0; t < 30000; ++t)
        for (auto i : truncation_select(f, 2, rng)) count[i] += 1;
    CHECK(count[0] == 30000);
    for (int i = 1; i < 4; ++i) CHECK(stats::binomial_z(count[i], 30000, 1.0 / 3.0) < 5.0);
}

TEST_CASE("tournament") {
    Rng rng(3);
    CHECK(tournament_select(std::vector<double>{0.3}, 7, rng) == 0);
    std::vector<double> f{1.0, 0.0};
    double losses = 0;
    const int trials = 200000;
    for (int t = 0; t < trials; ++t) losses += tournament_select(f, 7, rng) == 1;
    CHECK(stats::binomial_z(losses, trials, 1.0 / 128.0) < 5.0);
}

TEST_CASE("next_generation preserves the population size") {
    vec::IntVectorSystem sys({vec::IntKind::highest, 3, 10});
    Rng rng(4);
    for (std::size_t pop : {1u, 2u, 7u, 20u, 21u}) {
        for (auto sel : {Selection::truncation, Selection::tournament}) {
            for (bool keep : {false, true}) {
                EvolutionParams ep;
                ep.population_size = pop;
                ep.parent_count = std::min<std::size_t>(4, pop);
                ep.tournament_size = std::min<std::size_t>(7, pop);
                ep.selection = sel;
                ep.keep_parents = keep && ep.parent_count < pop;
                std::vector<vec::IntGenome> g;
                std::vector<double> f;
                for (std::size_t i = 0; i < pop; ++i) {
                    g.push_back(sys.random_genome(rng));
                    f.push_back(sys.fitness(g.back()));
                }
                for (int gen = 0; gen < 5; ++gen) {
                    g = next_generation<vec::IntVectorSystem>(g, f, ep, sys, rng);
                    CHECK(g.size() == pop);
                }
            }
        }
    }
}

TEST_CASE("without mutation, one-coordinate crossover copies elite parents") {
    vec::IntVectorSystem sys({vec::IntKind::highest, 1, 1000});
    Rng rng(5);
    EvolutionParams ep;
    ep.mutation_prob = 0.0;
    std::vector<vec::IntGenome> g;
    std::vector<double> f;
    for (int i = 0; i < 20; ++i) {
        g.push_back({i + 1});
        f.push_back(i);
    }
    auto next = next_generation<vec::IntVectorSystem>(g, f, ep, sys, rng);
    for (auto const& c : next) CHECK(c[0] >= 17);

    ep.parent_count = 1;
    next = next_generation<vec::IntVectorSystem>(g, f, ep, sys, rng);
    for (auto const& c : next) CHECK(c == vec::IntGenome{20});
}

TEST_CASE("evolve: termination below every fitness finishes at generation 0") {
    vec::IntVectorSystem sys({vec::IntKind::highest, 4, 100});
    EvolutionParams ep;
    ep.termination_value = 0.0;
    auto out = evolve(sys, ep, 9);
    CHECK(out.succeeded);
    CHECK(out.generations == 0);
}

TEST_CASE("evolve: a planted worker forces generation 0") {
    vec::IntVectorSystem sys({vec::IntKind::highest, 6, 1000});
    EvolutionParams ep;
    ep.termination_value = 6;
    std::vector<vec::IntGenome> planted{vec::IntGenome(6, 1000)};
    auto out = evolve(sys, ep, 10, std::span<const vec::IntGenome>(planted));
    CHECK(out.succeeded);
    CHECK(out.generations == 0);
    CHECK(out.best_genome == planted[0]);
}

TEST_CASE("generation-0 success rate matches 1 - (1 - 1/p)^pop") {
    // highest, n = 1, p = 10: each random genome works with probability 1/10
    vec::IntVectorSystem sys({vec::IntKind::highest, 1, 10});
    EvolutionParams ep;
    ep.termination_value = 1;
    auto summary = run(sys, ep, 4000, 77);
    double zero = 0;
    for (auto const& o : summary.per_evolution) zero += o.succeeded && o.generations == 0;
    CHECK(stats::binomial_z(zero, 4000, 1.0 - std::pow(0.9, 20)) < 5.0);
}

TEST_CASE("run: medians, failures, determinism") {
    vec::IntVectorSystem sys({vec::IntKind::highest, 2, 20});
    EvolutionParams ep;
    ep.mutation_prob = 0.01;
    ep.termination_value = 2;

    auto one = run(sys, ep, 1, 5);
    REQUIRE(one.median_generations);
    CHECK(*one.median_generations == static_cast<double>(one.per_evolution[0].generations));

    auto a = run(sys, ep, 16, 42, 1);
    auto b = run(sys, ep, 16, 42, 4);
    CHECK(a == b);
    std::vector<double> gens;
    for (auto const& o : a.per_evolution) gens.push_back(static_cast<double>(o.generations));
    CHECK(*a.median_generations == median(gens));

    EvolutionParams stuck = ep;
    stuck.generation_cap = 1;
    stuck.population_size = 1;
    stuck.parent_count = 1;
    vec::IntVectorSystem hard({vec::IntKind::highest, 8, 1000});
    stuck.termination_value = 8;
    auto failed = run(hard, stuck, 5, 1);
    CHECK(failed.failures == 5);
    CHECK_FALSE(failed.median_generations.has_value());

    CHECK_THROWS_AS(run(sys, ep, 0, 1), std::invalid_argument);
}

TEST_CASE("evolve is reproducible and records a non-decreasing elite trace under keep_parents") {
    linear::SortingSystem sys(linear::SortingConfig{});
    EvolutionParams ep;
    ep.record_trace = true;
    auto a = evolve(sys, ep, 123);
    auto b = evolve(sys, ep, 123);
    CHECK(a == b);
    CHECK(a.best_trace.size() == a.generations + 1);

    vec::IntVectorSystem high({vec::IntKind::highest, 3, 30});
    EvolutionParams kp;
    kp.mutation_prob = 0.01;
    kp.termination_value = 3;
    kp.keep_parents = true;
    kp.record_trace = true;
    auto c = evolve(high, kp, 5);
    CHECK(std::is_sorted(c.best_trace.begin(), c.best_trace.end()));
}

TEST_CASE("raising the termination value never adds workers") {
    linear::SortingSystem sys(linear::SortingConfig{});
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        auto g = sys.random_genome(rng);
        auto ctx = sys.make_context(rng);
        double f = sys.fitness(g, ctx);
        for (double lo : {-0.5, 0.0, 0.5})
            for (double hi : {0.6, 0.9, 1.0})
                if (f >= hi) CHECK(f >= lo);
    }
}

TEST_CASE("parameter validation") {
    EvolutionParams ep;
    ep.parent_count = 0;
    CHECK_THROWS_AS(ep.validate(), std::invalid_argument);
    ep = {};
    ep.mutation_prob = 1.5;
    CHECK_THROWS_AS(ep.validate(), std::invalid_argument);
    ep = {};
    ep.selection = Selection::tournament;
    ep.tournament_size = 21;
    CHECK_THROWS_AS(ep.validate(), std::invalid_argument);
    ep = {};
    ep.keep_parents = true;
    ep.parent_count = 20;
    CHECK_THROWS_AS(ep.validate(), std::invalid_argument);
}

TEST_CASE("seed splitting") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(split_seed(7, i));
    CHECK(seen.size() == 1000);
    CHECK(split_seed(7, 3) == split_seed(7, 3));
    CHECK(split_seed(7, 3) != split_seed(8, 3));

    Rng rng(11);
    std::vector<double> counts(6, 0.0);
    for (int i = 0; i < 60000; ++i) counts[rng.below(6)] += 1;
    CHECK(stats::chi_square(counts, std::vector<double>(6, 10000.0)) < 25.0);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.uniform(-1.0, 1.0);
        CHECK(u >= -1.0);
        CHECK(u < 1.0);
    }
}

}
