#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evolab/engine.hpp"
#include "evolab/rng.hpp"

namespace evolab::linear {

enum class Op : std::uint8_t { CompareSwap, For, IfVarLess, IncrementVar, AssignVar, GoTo, IfListLess, Swap };

// Operands are variable indices in [0, v+1] (0 reads 0, v+1 reads the list
// length, 1..v are writable) or, for GoTo, a jump target in [0, length].
struct Statement {
    Op op = Op::CompareSwap;
    std::uint16_t a = 0;
    std::uint16_t b = 0;
    std::uint16_t c = 0;

    bool operator==(Statement const&) const = default;
};

constexpr int kMaxVariables = 62;

struct LinearProgram {
    int statement_set = 1;
    int v = 2;
    std::vector<Statement> statements;

    std::size_t size() const { return statements.size(); }
    bool operator==(LinearProgram const&) const = default;
};

// Opcodes of statement sets 1, 2 and 3.
std::span<const Op> statement_set_ops(int statement_set);
std::string_view op_name(Op op);

// Checks operand ranges and set membership; throws std::invalid_argument.
void validate(LinearProgram const& program);

Statement random_statement(int statement_set, std::size_t length, int v, Rng& rng);
LinearProgram random_program(int statement_set, std::size_t length, int v, Rng& rng);

enum class HaltReason { finished, budget_exceeded };

struct ExecResult {
    std::vector<int> final_list;
    std::uint64_t executed = 0;
    HaltReason halt_reason = HaltReason::finished;
};

struct ExecStats {
    std::uint64_t executed = 0;
    HaltReason halt_reason = HaltReason::finished;
};

// next_statement: a For loops over the single statement after it (a For
// there nests), testing loop < limit before each pass. frame: the body runs
// to the end of the program, the first pass is unconditional, and falling
// off the end re-tests the innermost open loop.
enum class LoopMode { next_statement, frame };
// positional: swap when list[v_a] > list[v_b]. index_ordered: the smaller
// index receives the smaller value.
enum class CompareMode { positional, index_ordered };

struct ExecOptions {
    LoopMode loop = LoopMode::next_statement;
    CompareMode compare = CompareMode::positional;
};

// Runs the program on `list` in place. Every statement and every For
// re-test costs one unit of budget.
ExecStats execute_in_place(LinearProgram const& program, std::span<int> list, std::uint64_t budget,
                           ExecOptions const& options = {});
ExecResult execute(LinearProgram const& program, std::span<const int> input, std::uint64_t budget,
                   ExecOptions const& options = {});

// Step limit: factor * (a L^2 + b L + c). The default reference polynomial
// is the statement count of the three-statement nested-For sort, including
// the implicit End.
struct BudgetModel {
    double factor = 10.0;
    std::uint64_t a = 2;
    std::uint64_t b = 2;
    std::uint64_t c = 2;
};

std::uint64_t loop_budget(std::size_t list_length, BudgetModel const& model = {});

long forward_distance(std::span<const int> list);
long reverse_distance(std::span<const int> list);
double normalized_metric(long forward, long reverse);

double sort_fitness(LinearProgram const& program, std::span<const std::vector<int>> lists,
                    BudgetModel const& model = {}, ExecOptions const& options = {});

// Single-point crossover at `cut` (children swap suffixes), no mutation.
std::pair<LinearProgram, LinearProgram> crossover_at(LinearProgram const& a, LinearProgram const& b, std::size_t cut);
// Each statement independently becomes a fresh random statement with probability p.
void mutate_statements(LinearProgram& program, double p, Rng& rng);
// With probability p one uniformly chosen statement is redrawn.
void mutate_one_statement(LinearProgram& program, double p, Rng& rng);

enum class MutationMode { per_child, per_statement };
// Cut uniform in [1, length-1] followed by per-statement mutation.
std::pair<LinearProgram, LinearProgram> crossover_linear(LinearProgram const& a, LinearProgram const& b,
                                                         double mutation_prob, Rng& rng);

// Text form, one statement per line: "For v1 v0 v3", "CompareSwap v1 v2",
// "GoTo 4". Blank lines and lines starting with '#' are ignored on input.
std::string format_program(LinearProgram const& program);
LinearProgram parse_program(std::string_view text, int statement_set, int v);

// The three-statement sort for statement set 1 under the given compare mode.
LinearProgram canonical_bubble_sort(int v = 2, CompareMode compare = CompareMode::positional);

struct SortingContext {
    std::vector<std::vector<int>> lists;
};

struct SortingConfig {
    int statement_set = 1;
    int v = 2;
    std::size_t program_length = 5;
    std::vector<std::size_t> list_sizes{10, 30, 50};
    BudgetModel budget{};
    ExecOptions exec{};
    MutationMode mutation = MutationMode::per_child;
};

/// The list-sorting problem. Fresh random permutations are drawn for each
/// generation and shared by the whole population.
class SortingSystem {
public:
    using genome_type = LinearProgram;
    using context_type = SortingContext;

    explicit SortingSystem(SortingConfig config);

    SortingConfig const& config() const { return config_; }

    SortingContext make_context(Rng& rng) const;
    LinearProgram random_genome(Rng& rng) const;
    double fitness(LinearProgram const& program, SortingContext const& ctx) const;
    std::pair<LinearProgram, LinearProgram> crossover(LinearProgram const& a, LinearProgram const& b, Rng& rng) const;
    void mutate(LinearProgram& program, double mutation_prob, Rng& rng) const;

private:
    SortingConfig config_;
};

std::vector<int> random_permutation(std::size_t length, Rng& rng);

} // namespace evolab::linear
