#include <doctest.h>

#include <cmath>
#include <numbers>

#include "evolab/density.hpp"
#include "evolab/vector_systems.hpp"

using namespace evolab;
using namespace evolab::vec;

namespace {

// n-ball volume through the gamma function
double ball(int n, double r) {
    double h = n / 2.0;
    return std::pow(std::numbers::pi, h) * std::pow(r, n) / std::tgamma(h + 1.0);
}

bool within_se(DensityEstimate const& mc, double exact, double k = 3.0) {
    return std::abs(mc.density - exact) <= k * mc.std_error;
}

} // namespace

TEST_SUITE("density") {

TEST_CASE("sphere volumes") {
    CHECK(sphere_volume(2, 1.0) == doctest::Approx(std::numbers::pi).epsilon(1e-14));
    CHECK(sphere_volume(3, 1.0) == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-14));
    CHECK(sphere_volume(4, 0.8326) == doctest::Approx(2.370).epsilon(5e-4));
    CHECK(sphere_volume(4, std::sqrt(std::log(2.0))) == doctest::Approx(std::numbers::pi * std::numbers::pi / 2 * std::pow(std::log(2.0), 2)));
    for (int n = 1; n <= 30; ++n)
        for (double r : {0.1, 0.5, 1.0, 1.7})
            CHECK(sphere_volume(n, r) == doctest::Approx(ball(n, r)).epsilon(1e-12));
    CHECK(sphere_volume(5, 0.0) == 0.0);
}

TEST_CASE("closed forms") {
    CHECK(gaussian_density(2, 0.99).density == doctest::Approx(7.89e-3).epsilon(6e-4));
    CHECK(gaussian_density(4, 0.99).density == doctest::Approx(3.12e-5).epsilon(1.6e-3));
    CHECK(gaussian_density(10, 0.9999999).density == doctest::Approx(2.49e-38).epsilon(2e-3));
    CHECK(twisted_gaussian_density(2, 0.99).density == doctest::Approx(5.26e-3).epsilon(1e-3));
    CHECK(twisted_gaussian_density(2, 0.99).density ==
          doctest::Approx(gaussian_density(2, 0.99).density / 1.5).epsilon(1e-14));
    CHECK(twisted_gaussian_density(4, 0.5).density == doctest::Approx(0.01301).epsilon(4e-4));
    CHECK(twisted_gaussian_density(6, 0.5).density == doctest::Approx(6.14e-5).epsilon(1e-3));
    CHECK(highest_density(2, 50).density == doctest::Approx(4.0e-4).epsilon(1e-14));
    CHECK(highest_density(5, 1).density == 1.0);
    CHECK(highest_density(10, 100).density == doctest::Approx(1e-20).epsilon(1e-12));
    for (int n = 1; n <= 12; ++n) {
        double r = std::sqrt(-std::log(0.7));
        CHECK(gaussian_density(n, 0.7).density == doctest::Approx(ball(n, r) / std::pow(2.0, n)).epsilon(1e-12));
    }
    CHECK(gaussian_density(2, 0.99).method == DensityMethod::analytic);
    CHECK_FALSE(gaussian_density(2, 0.99).hits.has_value());
}

TEST_CASE("approximate flag") {
    CHECK_FALSE(gaussian_density(2, 0.5).approximate);
    CHECK(gaussian_density(2, 0.3).approximate);  // radius 1.097
    CHECK_FALSE(twisted_gaussian_density(2, 0.5).approximate);
    CHECK(twisted_gaussian_density(4, 0.2).approximate);
}

TEST_CASE("monotonicity") {
    double prev = 2.0;
    for (double t = 0.4; t < 1.0; t += 0.05) {
        double d = gaussian_density(3, t).density;
        CHECK(d <= prev);
        prev = d;
    }
    for (int n = 1; n < 8; ++n)
        for (int p = 1; p < 30; ++p) {
            CHECK(highest_density(n, p + 1).density <= highest_density(n, p).density);
            CHECK(highest_density(n + 1, p).density <= highest_density(n, p).density);
        }
}

TEST_CASE("Monte Carlo agrees with the closed forms") {
    MonteCarloOptions mc;
    mc.target_hits = 4000;
    std::uint64_t seed = 100;
    for (int n = 2; n <= 4; ++n) {
        for (double t : {0.9, 0.95}) {
            RealVectorSystem g({RealKind::gaussian, n});
            auto est = monte_carlo_density(working_trial(g, t), mc, ++seed);
            CHECK(within_se(est, gaussian_density(n, t).density));
            CHECK(est.method == DensityMethod::monte_carlo);
            CHECK(est.density == doctest::Approx(double(*est.hits) / double(*est.samples)));
            CHECK(est.std_error ==
                  doctest::Approx(std::sqrt(est.density * (1 - est.density) / double(*est.samples))));
        }
    }
    RealVectorSystem g2({RealKind::gaussian, 2});
    CHECK(within_se(monte_carlo_density(working_trial(g2, 0.99), mc, 5), 7.89e-3));

    RealVectorSystem tg({RealKind::twisted_gaussian, 2});
    for (double t : {0.9, 0.99})
        CHECK(within_se(monte_carlo_density(working_trial(tg, t), mc, 6), twisted_gaussian_density(2, t).density));

    for (auto [n, p] : {std::pair{1, 10}, {2, 20}, {3, 5}}) {
        IntVectorSystem h({IntKind::highest, n, p});
        CHECK(within_se(monte_carlo_density(working_trial(h, n), mc, 7), highest_density(n, p).density));
    }
}

TEST_CASE("below the minimum fitness everything works") {
    RealVectorSystem g({RealKind::gaussian, 3});
    MonteCarloOptions mc;
    auto est = monte_carlo_density(working_trial(g, 0.0), mc, 1);
    CHECK(est.density == 1.0);
    CHECK(*est.hits == 1000);
    CHECK(*est.samples == 1000);
}

TEST_CASE("nothing found") {
    IntVectorSystem h({IntKind::highest, 8, 1000});
    MonteCarloOptions mc;
    mc.max_samples = 5000;
    CHECK_THROWS_AS(monte_carlo_density(working_trial(h, 8), mc, 1), ZeroDensityError);
    try {
        monte_carlo_density(working_trial(h, 8), mc, 1);
    } catch (ZeroDensityError const& e) {
        CHECK(e.samples() == 5000);
        CHECK(e.upper_bound() > 0.0);
        CHECK(e.upper_bound() < 1e-3);
    }
}

TEST_CASE("enumeration") {
    IntVectorSystem tw({IntKind::twisted_binary, 2, 0, 3});
    auto e = enumerate_density(tw, 8);
    CHECK(*e.hits == 2);
    CHECK(*e.samples == 49);
    CHECK(e.density == doctest::Approx(2.0 / 49.0));
    CHECK(e.method == DensityMethod::enumeration);
    CHECK(e.std_error == 0.0);

    IntVectorSystem h({IntKind::highest, 3, 7});
    CHECK(enumerate_density(h, 3).density == doctest::Approx(highest_density(3, 7).density).epsilon(1e-14));
    CHECK(space_size(h) == 343u);
    IntVectorSystem big({IntKind::highest, 10, 100});
    CHECK_FALSE(space_size(big).has_value());
    CHECK_THROWS_AS(enumerate_density(big, 10), std::invalid_argument);
}

TEST_CASE("results do not depend on the worker count") {
    RealVectorSystem g({RealKind::gaussian, 3});
    MonteCarloOptions one, four;
    one.target_hits = four.target_hits = 3000;
    one.batch_size = four.batch_size = 1000;
    four.jobs = 4;
    auto a = monte_carlo_density(working_trial(g, 0.9), one, 11);
    auto b = monte_carlo_density(working_trial(g, 0.9), four, 11);
    CHECK(a.density == b.density);
    CHECK(a.hits == b.hits);
    CHECK(a.samples == b.samples);
}

}
