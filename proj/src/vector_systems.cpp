#include "evolab/vector_systems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace evolab::vec {

double gaussian_fitness(std::span<const double> x) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return std::exp(-r2);
}

double linear_fitness(std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s += std::abs(xi);
    return 1.0 - s;
}

int highest_fitness(std::span<const int> x, int p) {
    return static_cast<int>(std::count(x.begin(), x.end(), p));
}

std::vector<int> least_set_bit_table(int b) {
    if (b < 1 || b > 30) throw std::invalid_argument("bit count must lie in [1, 30]");
    std::vector<int> table((std::size_t{1} << b) - 1);
    for (std::size_t i = 0; i < table.size(); ++i) {
        auto k = static_cast<unsigned>(i + 1);
        table[i] = static_cast<int>(k & (~k + 1));
    }
    return table;
}

int binary_fitness(std::span<const int> x, std::span<const int> table) {
    int f = 0;
    for (int xi : x) f += table[static_cast<std::size_t>(xi)];
    return f;
}

TwistedPair twist_pair(int x, int y) { return {(x + y) / 2, std::abs(x - y)}; }

int twisted_binary_fitness(std::span<const int> x, std::span<const int> table) {
    if (x.size() % 2 != 0) throw std::invalid_argument("twisted binary genomes need an even dimension");
    int f = 0;
    for (std::size_t i = 0; i < x.size(); i += 2) {
        auto [u, v] = twist_pair(x[i], x[i + 1]);
        f += table[static_cast<std::size_t>(u)] + table[static_cast<std::size_t>(v)];
    }
    return f;
}

RotateScale::RotateScale(std::size_t n, TwistConfig const& config) : n_(n), rotation_(n * n, 0.0), scales_(n) {
    if (n < 1) throw std::invalid_argument("dimension must be >= 1");
    if (!(config.scale_base > 0.0)) throw std::invalid_argument("scale_base must be positive");
    for (std::size_t i = 0; i < n; ++i) rotation_[i * n + i] = 1.0;
    const double c = std::cos(config.angle);
    const double s = std::sin(config.angle);
    // Left-multiply by each plane rotation in turn.
    for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t col = 0; col < n; ++col) {
            double a = rotation_[p * n + col];
            double b = rotation_[(p + 1) * n + col];
            rotation_[p * n + col] = c * a - s * b;
            rotation_[(p + 1) * n + col] = s * a + c * b;
        }
    }
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        scales_[i] = scale;
        scale *= config.scale_base;
    }
}

std::vector<double> RotateScale::rotate(std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("dimension mismatch");
    std::vector<double> w(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) w[i] += rotation_[i * n_ + j] * x[j];
    return w;
}

std::vector<double> RotateScale::apply(std::span<const double> x) const {
    auto w = rotate(x);
    for (std::size_t i = 0; i < n_; ++i) w[i] *= scales_[i];
    return w;
}

std::vector<double> rotate_scale(std::span<const double> x, TwistConfig const& config) {
    return RotateScale(x.size(), config).apply(x);
}

double twisted_linear_fitness(std::span<const double> x, RotateScale const& map) {
    return linear_fitness(map.apply(x));
}

double twisted_gaussian_fitness(std::span<const double> x, RotateScale const& map) {
    return gaussian_fitness(map.apply(x));
}

void resample_one(RealGenome& x, Rng& rng) {
    if (x.empty()) return;
    x[rng.below(x.size())] = rng.uniform(-1.0, 1.0);
}

void resample_one(IntGenome& x, int lo, int hi, Rng& rng) {
    if (x.empty()) return;
    x[rng.below(x.size())] = static_cast<int>(rng.between(lo, hi));
}

std::string_view kind_name(RealKind kind) {
    switch (kind) {
    case RealKind::gaussian: return "gaussian";
    case RealKind::linear: return "linear";
    case RealKind::twisted_linear: return "twisted_linear";
    case RealKind::twisted_gaussian: return "twisted_gaussian";
    }
    return "?";
}

std::string_view kind_name(IntKind kind) {
    switch (kind) {
    case IntKind::highest: return "highest";
    case IntKind::binary: return "binary";
    case IntKind::twisted_binary: return "twisted_binary";
    }
    return "?";
}

namespace {

void check_dimension(int n) {
    if (n < 1 || n > kMaxDimensions)
        throw std::invalid_argument("dimension n must lie in [1, " + std::to_string(kMaxDimensions) + "]");
}

} // namespace

RealVectorSystem::RealVectorSystem(RealVectorConfig config)
    : config_(config), map_((check_dimension(config.n), static_cast<std::size_t>(config.n)), config.twist) {}

RealGenome RealVectorSystem::random_genome(Rng& rng) const {
    RealGenome x(static_cast<std::size_t>(config_.n));
    for (auto& xi : x) xi = rng.uniform(-1.0, 1.0);
    return x;
}

double RealVectorSystem::fitness(RealGenome const& x, EmptyContext const&) const {
    switch (config_.kind) {
    case RealKind::gaussian: return gaussian_fitness(x);
    case RealKind::linear: return linear_fitness(x);
    case RealKind::twisted_linear: return twisted_linear_fitness(x, map_);
    case RealKind::twisted_gaussian: return twisted_gaussian_fitness(x, map_);
    }
    return 0.0;
}

std::pair<RealGenome, RealGenome> RealVectorSystem::crossover(RealGenome const& a, RealGenome const& b,
                                                              Rng& rng) const {
    if (!config_.crossover) return {a, b};
    return vector_crossover(a, b, rng);
}

void RealVectorSystem::mutate(RealGenome& x, double p, Rng& rng) const {
    if (rng.chance(p)) resample_one(x, rng);
}

IntVectorSystem::IntVectorSystem(IntVectorConfig config) : config_(config) {
    check_dimension(config_.n);
    switch (config_.kind) {
    case IntKind::highest:
        if (config_.p < 1) throw std::invalid_argument("p must be >= 1");
        lo_ = 1;
        hi_ = config_.p;
        break;
    case IntKind::twisted_binary:
        if (config_.n % 2 != 0) throw std::invalid_argument("twisted binary needs an even n");
        [[fallthrough]];
    case IntKind::binary:
        if (config_.b < 1 || config_.b > 20) throw std::invalid_argument("b must lie in [1, 20]");
        table_ = least_set_bit_table(config_.b);
        lo_ = 0;
        hi_ = static_cast<int>(table_.size()) - 1;
        break;
    }
}

double IntVectorSystem::max_fitness() const {
    if (config_.kind == IntKind::highest) return config_.n;
    return static_cast<double>(config_.n) * static_cast<double>(1 << (config_.b - 1));
}

IntGenome IntVectorSystem::random_genome(Rng& rng) const {
    IntGenome x(static_cast<std::size_t>(config_.n));
    for (auto& xi : x) xi = static_cast<int>(rng.between(lo_, hi_));
    return x;
}

double IntVectorSystem::fitness(IntGenome const& x, EmptyContext const&) const {
    switch (config_.kind) {
    case IntKind::highest: return highest_fitness(x, config_.p);
    case IntKind::binary: return binary_fitness(x, table_);
    case IntKind::twisted_binary: return twisted_binary_fitness(x, table_);
    }
    return 0.0;
}

std::pair<IntGenome, IntGenome> IntVectorSystem::crossover(IntGenome const& a, IntGenome const& b, Rng& rng) const {
    if (!config_.crossover) return {a, b};
    return vector_crossover(a, b, rng);
}

void IntVectorSystem::mutate(IntGenome& x, double p, Rng& rng) const {
    if (rng.chance(p)) resample_one(x, lo_, hi_, rng);
}

} // namespace evolab::vec
