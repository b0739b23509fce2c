#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evolab/engine.hpp"
#include "evolab/rng.hpp"

namespace evolab::tree {

enum class Kind : std::uint8_t {
    Xor, And, Or, Not, Nand, Nor, Plus, Minus, Times, Divide, Negate, Const, Input, SubCall, Arg
};

// `value` is the constant for Const, the bit index for Input, the callee for
// SubCall and the parameter slot for Arg.
struct Node {
    Kind kind = Kind::Const;
    std::int8_t value = 0;

    bool operator==(Node const&) const = default;
};

// A tree in prefix order.
using Body = std::vector<Node>;

constexpr std::size_t kMaxNodes = 200;
constexpr std::size_t kMaxSubroutines = 4;
constexpr int kSubroutineArity = 2;
constexpr int kMaxBits = 20;

struct TreeProgram {
    int statement_set = 1;
    int n_bits = 4;
    Body main;
    std::vector<Body> subroutines;  // subroutine i may call only j < i

    std::size_t size() const;
    bool operator==(TreeProgram const&) const = default;
};

int arity(Kind kind);
std::string_view kind_name(Kind kind);

// Operator kinds (everything but the leaves) of statement sets 1..5.
std::span<const Kind> statement_set_functions(int statement_set);
// Inclusive range of the constant leaves: {0,1} or [-3,3].
std::pair<int, int> constant_range(int statement_set);

// One past the last node of the subtree rooted at `pos`.
std::size_t subtree_end(std::span<const Node> body, std::size_t pos);

// Structural checks (arity, kinds, references, node cap); throws std::invalid_argument.
void validate(TreeProgram const& program);

enum class OutputRule { nonzero, mod2 };

// Integer value of the main tree on the input whose bit i is Input i, or
// nullopt on division by zero.
std::optional<std::int64_t> eval_value(TreeProgram const& program, std::uint32_t inputs);
std::optional<int> eval_tree(TreeProgram const& program, std::uint32_t inputs, OutputRule rule = OutputRule::nonzero);
int parity_bit(std::uint32_t inputs);
// Inputs on which the prediction equals the odd-parity bit; faults count as wrong.
int parity_fitness(TreeProgram const& program, OutputRule rule = OutputRule::nonzero);

/// Program-length law: 20 buckets of width 10 covering 1..200, plus an
/// optional law over the number of subroutines (0..4).
struct LengthDistribution {
    static constexpr std::size_t kBuckets = 20;
    static constexpr std::size_t kBucketWidth = 10;

    std::array<double, kBuckets> buckets{};
    std::optional<std::array<double, kMaxSubroutines + 1>> subroutines;

    // Uniform on [10,50] with a linear tail reaching zero at 100.
    static LengthDistribution seed_default();
    // Histogram of observed program sizes (and subroutine counts when given).
    static LengthDistribution from_samples(std::span<const std::size_t> lengths,
                                           std::span<const std::size_t> subroutine_counts = {});
    static std::size_t bucket_of(std::size_t length);

    void normalize();
    std::size_t sample_length(Rng& rng) const;
    std::size_t sample_subroutines(Rng& rng) const;
};

double total_variation(LengthDistribution const& a, LengthDistribution const& b);
LengthDistribution blend(LengthDistribution const& a, LengthDistribution const& b, double weight_b);

struct ArchitectureProbs {
    double create = 0.005;
    double duplicate = 0.005;
    double remove = 0.005;
};

// Random tree of exactly `size` nodes for the given branch. `branch` is -1
// for main and the subroutine index otherwise; `subroutine_count` bounds the
// callable subroutines of main.
Body random_body(int statement_set, int n_bits, std::size_t size, int branch, std::size_t subroutine_count, Rng& rng);
TreeProgram random_tree(int statement_set, int n_bits, std::size_t total_size, std::size_t subroutine_count, Rng& rng);
TreeProgram random_tree(int statement_set, int n_bits, LengthDistribution const& law, bool allow_subroutines, Rng& rng);

// Subtree swap between matching branches; an oversized child is replaced by
// its first parent. With internal_bias > 0 each crossover point is an
// operator node with that probability and a leaf otherwise; 0 means uniform.
std::pair<TreeProgram, TreeProgram> subtree_crossover(TreeProgram const& a, TreeProgram const& b, Rng& rng,
                                                      double internal_bias = 0.0);
// A uniformly chosen node is replaced by a fresh subtree of 1..20 nodes that fits the cap.
void subtree_mutation(TreeProgram& program, Rng& rng);

bool create_subroutine(TreeProgram& program, Rng& rng);
bool duplicate_subroutine(TreeProgram& program, Rng& rng);
bool delete_subroutine(TreeProgram& program, Rng& rng);
void architecture_events(TreeProgram& program, ArchitectureProbs const& probs, Rng& rng);

// S-expression text: the main tree on the first line, then one
// "(Sub i <tree>)" line per subroutine.
std::string format_tree(TreeProgram const& program);
TreeProgram parse_tree(std::string_view text, int statement_set, int n_bits);

struct ParityConfig {
    int statement_set = 1;
    int n_bits = 4;
    bool subroutines = false;
    LengthDistribution lengths = LengthDistribution::seed_default();
    ArchitectureProbs architecture{};
    OutputRule output_rule = OutputRule::nonzero;
    double internal_bias = 0.0;
};

/// n-bit parity over tree programs.
class ParitySystem {
public:
    using genome_type = TreeProgram;
    using context_type = EmptyContext;

    explicit ParitySystem(ParityConfig config);

    ParityConfig const& config() const { return config_; }

    EmptyContext make_context(Rng&) const { return {}; }
    TreeProgram random_genome(Rng& rng) const;
    double fitness(TreeProgram const& program, EmptyContext const&) const;
    std::pair<TreeProgram, TreeProgram> crossover(TreeProgram const& a, TreeProgram const& b, Rng& rng) const;
    void mutate(TreeProgram& program, double mutation_prob, Rng& rng) const;

private:
    ParityConfig config_;
};

struct ProgramShape {
    std::size_t length = 0;
    std::size_t subroutines = 0;
};

struct SelfConsistentOptions {
    double blend_weight = 0.5;   // weight of the new histogram
    double tolerance = 0.05;     // total-variation stopping distance
    int max_iterations = 10;
    std::size_t min_working = 10;
};

struct SelfConsistentResult {
    LengthDistribution distribution;
    std::vector<double> distances;  // one per iteration
    bool converged = false;
};

// Shapes of the working programs found when evolving from `law`.
using WorkingSampler = std::function<std::vector<ProgramShape>(LengthDistribution const& law, std::uint64_t seed)>;

// Iterates law -> evolve -> histogram of working programs -> blend until the
// law stops moving. Throws InsufficientDataError when an iteration yields
// fewer than min_working programs.
SelfConsistentResult iterate_self_consistent(LengthDistribution start, WorkingSampler const& sampler,
                                             SelfConsistentOptions const& options, std::uint64_t seed);

SelfConsistentResult self_consistent_distribution(ParityConfig config, EvolutionParams const& params,
                                                  std::size_t evolutions, std::uint64_t seed,
                                                  SelfConsistentOptions const& options = {}, std::size_t jobs = 1);

} // namespace evolab::tree
