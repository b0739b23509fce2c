#include <doctest.h>

#include <cmath>
#include <numeric>

#include "evolab/vector_systems.hpp"
#include "oracles.hpp"
#include "stats.hpp"

using namespace evolab;
using namespace evolab::vec;

TEST_SUITE("vector_systems") {

TEST_CASE("gaussian, linear and highest examples") {
    CHECK(gaussian_fitness(RealGenome{0, 0}) == 1.0);
    CHECK(gaussian_fitness(RealGenome{0.1, 0.1}) == doctest::Approx(std::exp(-0.02)).epsilon(1e-14));
    CHECK(gaussian_fitness(RealGenome{0.1, 0.1}) == doctest::Approx(0.980199).epsilon(1e-6));
    CHECK(linear_fitness(RealGenome{0, 0, 0}) == 1.0);
    CHECK(linear_fitness(RealGenome{0.5, -0.5}) == 0.0);
    CHECK(highest_fitness(IntGenome{7, 7, 7}, 7) == 3);
    CHECK(highest_fitness(IntGenome{1, 1, 1}, 7) == 0);
    CHECK(highest_fitness(IntGenome{7, 1, 7}, 7) == 2);

    Rng rng(1);
    RealVectorSystem lin({RealKind::linear, 5});
    for (int i = 0; i < 2000; ++i) {
        auto x = lin.random_genome(rng);
        double f = lin.fitness(x);
        CHECK(f > -4.0);
        CHECK(f <= 1.0);
        for (double c : x) {
            CHECK(c >= -1.0);
            CHECK(c < 1.0);
        }
    }
}

TEST_CASE("least set bit tables") {
    CHECK(least_set_bit_table(4) == std::vector<int>{1, 2, 1, 4, 1, 2, 1, 8, 1, 2, 1, 4, 1, 2, 1});
    CHECK(least_set_bit_table(3) == std::vector<int>{1, 2, 1, 4, 1, 2, 1});
    for (int b = 1; b <= 12; ++b) {
        auto t = least_set_bit_table(b);
        REQUIRE(t.size() == (1u << b) - 1);
        CHECK(t[0] == 1);
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == static_cast<int>((i + 1) & ~i));
    }
}

TEST_CASE("binary and twisted binary") {
    auto t3 = least_set_bit_table(3);
    CHECK(binary_fitness(IntGenome{3, 3}, t3) == 8);
    CHECK(binary_fitness(IntGenome{0, 0, 0}, t3) == 3);
    for (int b = 1; b <= 6; ++b) {
        auto t = least_set_bit_table(b);
        int best = *std::max_element(t.begin(), t.end());
        CHECK(best == 1 << (b - 1));
        for (std::size_t i = 0; i < t.size(); ++i)
            CHECK((t[i] == best) == (static_cast<int>(i) == (1 << (b - 1)) - 1));
    }

    CHECK(twist_pair(2, 5) == TwistedPair{3, 3});
    CHECK(twist_pair(5, 2) == TwistedPair{3, 3});
    CHECK(twist_pair(0, 3) == TwistedPair{1, 3});
    CHECK(twist_pair(0, 0) == TwistedPair{0, 0});
    CHECK(twisted_binary_fitness(IntGenome{2, 5}, t3) == 8);
    CHECK(twisted_binary_fitness(IntGenome{0, 3}, t3) == 6);

    // pairs reaching 8 for b = 3, by brute force
    int eight = 0;
    for (int x = 0; x <= 6; ++x)
        for (int y = 0; y <= 6; ++y) eight += twisted_binary_fitness(IntGenome{x, y}, t3) == 8;
    CHECK(eight == 2);
}

TEST_CASE("rotation and scaling") {
    for (std::size_t n = 1; n <= 12; ++n) {
        RotateScale m(n);
        auto const& q = m.rotation();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0;
                for (std::size_t k = 0; k < n; ++k) dot += q[i * n + k] * q[j * n + k];
                CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-12);
            }
            CHECK(m.scales()[i] == doctest::Approx(std::pow(1.5, static_cast<double>(i))).epsilon(1e-15));
        }
    }

    Rng rng(2);
    for (int i = 0; i < 10000; ++i) {
        std::size_t n = 1 + rng.below(10);
        RealGenome x(n);
        for (auto& c : x) c = rng.uniform(-1.0, 1.0);
        RotateScale m(n);
        auto y = m.rotate(x);
        double a = 0, b = 0;
        for (std::size_t k = 0; k < n; ++k) {
            a += x[k] * x[k];
            b += y[k] * y[k];
        }
        CHECK(std::abs(std::sqrt(a) - std::sqrt(b)) < 1e-12);
    }

    RotateScale two(2);
    for (double a : {-0.7, -0.1, 0.3, 0.9}) {
        auto w = two.apply(RealGenome{a, a});
        CHECK(std::abs(w[0]) < 1e-15);
        CHECK(w[1] == doctest::Approx(1.5 * std::sqrt(2.0) * a).epsilon(1e-14));
    }
    auto zero = rotate_scale(RealGenome{0, 0, 0});
    CHECK(zero == std::vector<double>{0, 0, 0});
    CHECK(twisted_linear_fitness(RealGenome{0, 0, 0}, RotateScale(3)) == 1.0);
    CHECK(twisted_gaussian_fitness(RealGenome{0, 0, 0}, RotateScale(3)) == 1.0);
}

TEST_CASE("mutation changes at most one coordinate and resamples uniformly") {
    Rng rng(3);
    RealVectorSystem g({RealKind::gaussian, 4});
    std::vector<double> fresh;
    for (int i = 0; i < 100000; ++i) {
        auto x = g.random_genome(rng);
        auto y = x;
        g.mutate(y, 1.0, rng);
        int diff = 0;
        for (std::size_t k = 0; k < 4; ++k)
            if (x[k] != y[k]) {
                ++diff;
                fresh.push_back(y[k]);
            }
        CHECK(diff <= 1);
    }
    // 1.95 / sqrt(n) is the 0.1% critical value
    CHECK(stats::ks_uniform(fresh, -1.0, 1.0) < 1.95 / std::sqrt(static_cast<double>(fresh.size())));

    IntVectorSystem h({IntKind::highest, 3, 10});
    std::vector<double> counts(10, 0.0);
    for (int i = 0; i < 50000; ++i) {
        IntGenome x{5};
        resample_one(x, 1, 10, rng);
        CHECK(x[0] >= 1);
        CHECK(x[0] <= 10);
        counts[static_cast<std::size_t>(x[0] - 1)] += 1;
        auto y = h.random_genome(rng);
        auto z = y;
        h.mutate(z, 1.0, rng);
        int diff = 0;
        for (std::size_t k = 0; k < 3; ++k) diff += y[k] != z[k];
        CHECK(diff <= 1);
        auto w = y;
        h.mutate(w, 0.0, rng);
        CHECK(w == y);
    }
    CHECK(stats::chi_square(counts, std::vector<double>(10, 5000.0)) < 27.9);
}

TEST_CASE("crossover") {
    Rng rng(4);
    IntGenome a{1, 2, 3, 4, 5}, b{6, 7, 8, 9, 10};
    for (int i = 0; i < 1000; ++i) {
        auto [c1, c2] = vector_crossover(a, b, rng);
        std::size_t k = 0;
        while (k < 5 && c1[k] == a[k]) ++k;
        CHECK(k >= 1);
        CHECK(k <= 4);
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(c1[j] == (j < k ? a[j] : b[j]));
            CHECK(c1[j] + c2[j] == a[j] + b[j]);
        }
    }
    auto [s1, s2] = vector_crossover(a, a, rng);
    CHECK(s1 == a);
    CHECK(s2 == a);
    auto [o1, o2] = vector_crossover(IntGenome{3}, IntGenome{9}, rng);
    CHECK(o1 == IntGenome{3});
    CHECK(o2 == IntGenome{9});

    RealVectorSystem off({RealKind::gaussian, 3, {}, false});
    RealGenome x{0.1, 0.2, 0.3}, y{-0.1, -0.2, -0.3};
    auto [d1, d2] = off.crossover(x, y, rng);
    CHECK(d1 == x);
    CHECK(d2 == y);
}

TEST_CASE("parallel systems improve coordinate by coordinate") {
    Rng rng(5);
    for (int i = 0; i < 5000; ++i) {
        std::size_t n = 1 + rng.below(6);
        RealGenome x(n);
        for (auto& c : x) c = rng.uniform(-1.0, 1.0);
        auto k = rng.below(n);
        auto y = x;
        y[k] = rng.uniform(-1.0, 1.0);
        bool closer = std::abs(y[k]) < std::abs(x[k]);
        if (std::abs(y[k]) != std::abs(x[k])) {
            CHECK((gaussian_fitness(y) > gaussian_fitness(x)) == closer);
            CHECK((linear_fitness(y) > linear_fitness(x)) == closer);
        }

        IntGenome u(n);
        for (auto& c : u) c = 1 + static_cast<int>(rng.below(5));
        auto v = u;
        v[k] = 1 + static_cast<int>(rng.below(5));
        CHECK((highest_fitness(v, 5) > highest_fitness(u, 5)) == (v[k] == 5 && u[k] != 5));
    }
}

TEST_CASE("twisted systems") {
    RotateScale m2(2);
    std::vector<double> steps{1e-6, 1e-3, 0.01, 0.1, 0.5};
    for (double a = -0.45; a <= 0.45; a += 0.05) CHECK(oracle::ridge_holds(a, m2, steps));

    // off the peak some single-axis move always helps
    Rng rng(6);
    for (std::size_t n : {2u, 3u, 6u}) {
        RotateScale m(n);
        for (int i = 0; i < 2000; ++i) {
            RealGenome x(n);
            for (auto& c : x) c = rng.uniform(-1.0, 1.0);
            double f = twisted_gaussian_fitness(x, m);
            bool better = false;
            for (std::size_t k = 0; k < n && !better; ++k) {
                for (double h : {1e-3, -1e-3}) {
                    auto y = x;
                    y[k] += h;
                    if (twisted_gaussian_fitness(y, m) > f) better = true;
                }
            }
            CHECK(better);
        }
    }
}

TEST_CASE("system ranges") {
    IntVectorSystem h({IntKind::highest, 4, 50});
    CHECK(h.low() == 1);
    CHECK(h.high() == 50);
    CHECK(h.max_fitness() == 4);
    IntVectorSystem bin({IntKind::binary, 3, 0, 4});
    CHECK(bin.low() == 0);
    CHECK(bin.high() == 14);
    CHECK(bin.max_fitness() == 24);
    IntVectorSystem tw({IntKind::twisted_binary, 2, 0, 3});
    CHECK(tw.max_fitness() == 8);
    CHECK_THROWS(IntVectorSystem({IntKind::twisted_binary, 3, 0, 3}));
}

}
