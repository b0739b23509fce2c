#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evolab {

// Raised when a procedure collected too few working genomes to continue.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A Monte Carlo estimate that never saw a hit. `upper_bound` is the 95%
// upper confidence limit on the density given `samples` misses.
class ZeroDensityError : public std::runtime_error {
public:
    ZeroDensityError(std::uint64_t samples, double upper_bound)
        : std::runtime_error("no working genome in " + std::to_string(samples) + " samples (density < " +
                             std::to_string(upper_bound) + ")"),
          samples_(samples),
          upper_bound_(upper_bound) {}

    std::uint64_t samples() const { return samples_; }
    double upper_bound() const { return upper_bound_; }

private:
    std::uint64_t samples_;
    double upper_bound_;
};

} // namespace evolab
