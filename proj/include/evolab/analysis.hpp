#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evolab {

// Middle element of the sorted values; mean of the two middle ones for an
// even count. Throws std::invalid_argument on empty input.
double median(std::span<const double> values);

// K = G * sqrt(D). Requires D > 0.
double k_value(double generations, double density);

// K'(delta) = G * sqrt(D2) / ((n + delta) * ln(n + delta)), where D2 is the
// density of the two-dimensional instance. Requires n + delta > 1.
double k_prime(double generations, double density2, double n, double delta);

struct KPrimePoint {
    double n = 0;
    double generations = 0;
    double density2 = 0;
};

struct DeltaFit {
    double delta = 0;
    double residual = 0;  // root-mean-square coefficient of variation at the optimum
};

/// Fits the offset delta in f2(n) ~ 1 / ((n + delta) ln(n + delta)).
///
/// Each group holds points that share a difficulty (same p, or same t) and
/// differ in n. The fit minimises the mean squared coefficient of variation
/// of K'(delta) within each group: a coarse grid over [lo, hi] followed by
/// golden-section refinement. At least one group must contain three
/// distinct n values.
DeltaFit fit_f2_delta(std::span<const std::vector<KPrimePoint>> groups, double lo = -0.95, double hi = 5.0);

// One parameter point of an experiment.
struct ScalingRow {
    std::string system;
    std::map<std::string, double> params;  // statement_set, v, program_length, n_bits, n, p, b, ...
    std::size_t evolutions = 0;
    std::size_t failures = 0;
    std::optional<double> median_generations;
    std::optional<double> density;
    std::string density_method;
    std::optional<double> density_stderr;
    std::optional<double> density2;
    std::optional<double> k;
    std::optional<double> kprime_delta;
    std::optional<double> kprime;

    // Recomputes k and kprime from median_generations, density, density2 and
    // kprime_delta (whichever inputs are present).
    void derive_statistics();
};

} // namespace evolab
