#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "evolab/analysis.hpp"
#include "evolab/rng.hpp"

using namespace evolab;

namespace {

std::vector<KPrimePoint> synthetic(double c, double delta, double d2) {
    std::vector<KPrimePoint> g;
    for (double n : {2.0, 4.0, 6.0, 8.0, 10.0})
        g.push_back({n, c * (n + delta) * std::log(n + delta) / std::sqrt(d2), d2});
    return g;
}

} // namespace

TEST_SUITE("analysis") {

TEST_CASE("median") {
    CHECK(median(std::vector<double>{1, 2, 3}) == 2);
    CHECK(median(std::vector<double>{1, 2, 3, 4}) == 2.5);
    CHECK(median(std::vector<double>{242}) == 242);
    CHECK(median(std::vector<double>{771, 772}) == 771.5);
    CHECK_THROWS_AS(median(std::vector<double>{}), std::invalid_argument);

    Rng rng(1);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> v(1 + rng.below(40));
        for (auto& x : v) x = static_cast<double>(rng.below(1000));
        double m = median(v);
        CHECK(m >= *std::min_element(v.begin(), v.end()));
        CHECK(m <= *std::max_element(v.begin(), v.end()));
        rng.shuffle(std::span<double>(v));
        CHECK(median(v) == m);
    }
}

TEST_CASE("K") {
    CHECK(k_value(242, 1.313e-3) == doctest::Approx(8.77).epsilon(1e-3));
    CHECK(k_value(0, 0.5) == 0.0);
    CHECK(k_value(34934, 3.23e-8) == doctest::Approx(6.28).epsilon(1e-3));
    CHECK_THROWS_AS(k_value(10, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(k_value(10, -1e-3), std::invalid_argument);
    for (double c : {0.5, 3.0, 100.0})
        CHECK(k_value(242 * c, 1.313e-3 / (c * c)) == doctest::Approx(k_value(242, 1.313e-3)).epsilon(1e-13));
}

TEST_CASE("K'") {
    CHECK(k_prime(459, 4.0e-4, 2, 0.6) == doctest::Approx(3.7).epsilon(3e-3));
    CHECK(k_prime(1435, 4.0e-4, 4, 0.6) == doctest::Approx(4.09).epsilon(1e-3));
    CHECK(k_prime(1036, 7.85e-5, 2, 0.05) == doctest::Approx(6.24).epsilon(1e-3));
    CHECK_THROWS_AS(k_prime(10, 1e-3, 1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(k_prime(10, 1e-3, 0.5, 0.3), std::invalid_argument);
    for (double delta : {0.05, 0.6, 1.0}) {
        double ratio = k_prime(500, 2e-3, 2, delta) / k_value(500, 2e-3);
        CHECK(ratio == doctest::Approx(1.0 / ((2 + delta) * std::log(2 + delta))).epsilon(1e-14));
    }
}

TEST_CASE("delta fit") {
    std::vector<std::vector<KPrimePoint>> groups{synthetic(4.0, 0.6, 4e-4), synthetic(5.0, 0.6, 1e-4)};
    auto fit = fit_f2_delta(groups);
    CHECK(std::abs(fit.delta - 0.6) <= 0.05);
    CHECK(fit.residual < 1e-6);

    std::vector<std::vector<KPrimePoint>> other{synthetic(2.0, 0.05, 1e-3)};
    CHECK(std::abs(fit_f2_delta(other).delta - 0.05) <= 0.05);

    // published medians of the highest system, p = 50, 100, 200
    std::vector<std::vector<KPrimePoint>> published{
        {{2, 459, 1 / 2500.0}, {4, 1435, 1 / 2500.0}, {6, 2794.5, 1 / 2500.0}, {8, 3899.5, 1 / 2500.0},
         {10, 5511, 1 / 2500.0}},
        {{2, 1069.5, 1e-4}, {4, 3121.5, 1e-4}, {6, 5805.5, 1e-4}, {8, 8705.5, 1e-4}, {10, 13178, 1e-4}},
        {{2, 2390.5, 2.5e-5}, {4, 7161, 2.5e-5}, {6, 12204.5, 2.5e-5}, {8, 17692, 2.5e-5}, {10, 26675.5, 2.5e-5}}};
    auto pub = fit_f2_delta(published);
    CHECK(pub.delta >= 0.3);
    CHECK(pub.delta <= 1.0);

    std::vector<std::vector<KPrimePoint>> flat{{{2, 100, 1e-3}, {4, 100, 1e-3}, {6, 100, 1e-3}}};
    DeltaFit f;
    CHECK_NOTHROW(f = fit_f2_delta(flat));
    CHECK(std::isfinite(f.residual));
    CHECK(f.residual > 0.0);

    std::vector<std::vector<KPrimePoint>> single{{{4, 100, 1e-3}, {4, 120, 1e-3}}};
    CHECK_THROWS_AS(fit_f2_delta(single), std::invalid_argument);
}

TEST_CASE("row statistics") {
    ScalingRow r;
    r.median_generations = 459;
    r.density = 4e-4;
    r.density2 = 4e-4;
    r.kprime_delta = 0.6;
    r.params["n"] = 2;
    r.derive_statistics();
    REQUIRE(r.k);
    REQUIRE(r.kprime);
    CHECK(*r.k == doctest::Approx(9.18).epsilon(1e-9));
    CHECK(*r.kprime == doctest::Approx(k_prime(459, 4e-4, 2, 0.6)).epsilon(1e-12));

    ScalingRow none;
    none.density = 1e-3;
    none.derive_statistics();
    CHECK_FALSE(none.k.has_value());
    CHECK_FALSE(none.kprime.has_value());
}

}
