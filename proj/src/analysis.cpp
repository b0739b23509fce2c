#include "evolab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace evolab {

double median(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty list");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    std::size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) return v[mid];
    return 0.5 * (v[mid - 1] + v[mid]);
}

double k_value(double generations, double density) {
    if (!(density > 0.0)) throw std::invalid_argument("k_value: density must be positive");
    return generations * std::sqrt(density);
}

double k_prime(double generations, double density2, double n, double delta) {
    double shifted = n + delta;
    if (!(shifted > 1.0)) throw std::invalid_argument("k_prime: n + delta must exceed 1");
    if (!(density2 > 0.0)) throw std::invalid_argument("k_prime: density must be positive");
    return generations * std::sqrt(density2) / (shifted * std::log(shifted));
}

namespace {

double mean_squared_cv(std::span<const std::vector<KPrimePoint>> groups, double delta) {
    double total = 0.0;
    std::size_t used = 0;
    for (auto const& group : groups) {
        if (group.size() < 2) continue;
        double sum = 0.0;
        double sum_sq = 0.0;
        for (auto const& p : group) {
            double k = k_prime(p.generations, p.density2, p.n, delta);
            sum += k;
            sum_sq += k * k;
        }
        double m = sum / static_cast<double>(group.size());
        double var = std::max(0.0, sum_sq / static_cast<double>(group.size()) - m * m);
        total += m != 0.0 ? var / (m * m) : 0.0;
        ++used;
    }
    return used ? total / static_cast<double>(used) : 0.0;
}

} // namespace

DeltaFit fit_f2_delta(std::span<const std::vector<KPrimePoint>> groups, double lo, double hi) {
    double min_n = std::numeric_limits<double>::infinity();
    bool enough = false;
    for (auto const& group : groups) {
        std::set<double> ns;
        for (auto const& p : group) {
            ns.insert(p.n);
            min_n = std::min(min_n, p.n);
        }
        enough = enough || ns.size() >= 3;
    }
    if (!enough) throw std::invalid_argument("fit_f2_delta: need a group with at least 3 distinct n values");
    lo = std::max(lo, 1.0 - min_n + 1e-6);
    if (!(hi > lo)) throw std::invalid_argument("fit_f2_delta: empty search interval");

    auto objective = [&](double d) { return mean_squared_cv(groups, d); };

    constexpr int kGrid = 2000;
    double step = (hi - lo) / kGrid;
    int best = 0;
    double best_val = objective(lo);
    for (int i = 1; i <= kGrid; ++i) {
        double v = objective(lo + step * i);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }

    double a = lo + step * std::max(0, best - 1);
    double b = lo + step * std::min(kGrid, best + 1);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    for (int it = 0; it < 80 && b - a > 1e-10; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    double delta = 0.5 * (a + b);
    double val = objective(delta);
    if (best_val < val) {
        delta = lo + step * best;
        val = best_val;
    }
    return {delta, std::sqrt(val)};
}

void ScalingRow::derive_statistics() {
    k.reset();
    kprime.reset();
    if (median_generations && density && *density > 0.0) k = k_value(*median_generations, *density);
    auto n_it = params.find("n");
    if (median_generations && density2 && *density2 > 0.0 && kprime_delta && n_it != params.end() &&
        n_it->second + *kprime_delta > 1.0)
        kprime = k_prime(*median_generations, *density2, n_it->second, *kprime_delta);
}

} // namespace evolab
