#include "evolab/linear_gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace evolab::linear {

namespace {

constexpr std::array<Op, 2> kSet1{Op::CompareSwap, Op::For};
constexpr std::array<Op, 5> kSet2{Op::IfVarLess, Op::IncrementVar, Op::AssignVar, Op::GoTo, Op::CompareSwap};
constexpr std::array<Op, 6> kSet3{Op::IfVarLess, Op::IncrementVar, Op::AssignVar,
                                  Op::GoTo,      Op::IfListLess,   Op::Swap};

constexpr std::array<std::string_view, 8> kNames{"CompareSwap", "For",     "IfVarLess",  "IncrementVar",
                                                 "AssignVar",   "GoTo",    "IfListLess", "Swap"};

// Number of variable operands, and how many of the leading ones are writes.
struct OperandShape {
    int count;
    int writes;
};

constexpr OperandShape shape(Op op) {
    switch (op) {
    case Op::CompareSwap: return {2, 0};
    case Op::For: return {3, 1};
    case Op::IfVarLess: return {2, 0};
    case Op::IncrementVar: return {1, 1};
    case Op::AssignVar: return {2, 1};
    case Op::GoTo: return {0, 0};
    case Op::IfListLess: return {2, 0};
    case Op::Swap: return {2, 0};
    }
    return {0, 0};
}

void check_set(int statement_set) {
    if (statement_set < 1 || statement_set > 3)
        throw std::invalid_argument("linear statement set must be 1, 2 or 3");
}

} // namespace

std::span<const Op> statement_set_ops(int statement_set) {
    check_set(statement_set);
    switch (statement_set) {
    case 1: return kSet1;
    case 2: return kSet2;
    default: return kSet3;
    }
}

std::string_view op_name(Op op) { return kNames[static_cast<std::size_t>(op)]; }

void validate(LinearProgram const& program) {
    auto ops = statement_set_ops(program.statement_set);
    if (program.v < 1 || program.v > kMaxVariables)
        throw std::invalid_argument("variable count out of range");
    if (program.statements.empty()) throw std::invalid_argument("program must have at least one statement");
    const int top = program.v + 1;
    for (std::size_t i = 0; i < program.statements.size(); ++i) {
        auto const& s = program.statements[i];
        if (std::find(ops.begin(), ops.end(), s.op) == ops.end())
            throw std::invalid_argument("statement " + std::to_string(i) + ": " + std::string(op_name(s.op)) +
                                        " is not in statement set " + std::to_string(program.statement_set));
        if (s.op == Op::GoTo) {
            if (s.a > program.statements.size())
                throw std::invalid_argument("statement " + std::to_string(i) + ": jump target out of range");
            continue;
        }
        auto [count, writes] = shape(s.op);
        std::array<int, 3> operands{s.a, s.b, s.c};
        for (int k = 0; k < count; ++k) {
            int lo = k < writes ? 1 : 0;
            int hi = k < writes ? program.v : top;
            if (operands[k] < lo || operands[k] > hi)
                throw std::invalid_argument("statement " + std::to_string(i) + ": operand v" +
                                            std::to_string(operands[k]) + " out of range");
        }
    }
}

Statement random_statement(int statement_set, std::size_t length, int v, Rng& rng) {
    auto ops = statement_set_ops(statement_set);
    Statement s;
    s.op = ops[rng.below(ops.size())];
    if (s.op == Op::GoTo) {
        s.a = static_cast<std::uint16_t>(rng.below(length + 1));
        return s;
    }
    auto [count, writes] = shape(s.op);
    std::array<std::uint16_t*, 3> slots{&s.a, &s.b, &s.c};
    for (int k = 0; k < count; ++k) {
        if (k < writes)
            *slots[k] = static_cast<std::uint16_t>(1 + rng.below(static_cast<std::uint64_t>(v)));
        else
            *slots[k] = static_cast<std::uint16_t>(rng.below(static_cast<std::uint64_t>(v) + 2));
    }
    return s;
}

LinearProgram random_program(int statement_set, std::size_t length, int v, Rng& rng) {
    if (length < 1) throw std::invalid_argument("program length must be >= 1");
    if (v < 1 || v > kMaxVariables) throw std::invalid_argument("variable count out of range");
    LinearProgram p{statement_set, v, {}};
    p.statements.reserve(length);
    for (std::size_t i = 0; i < length; ++i) p.statements.push_back(random_statement(statement_set, length, v, rng));
    return p;
}

namespace {

struct Machine {
    std::span<int> list;
    std::int64_t L;
    int v;
    CompareMode compare;
    std::uint64_t budget;
    std::uint64_t executed = 0;
    std::array<std::int64_t, kMaxVariables + 2> vars{};

    Machine(LinearProgram const& program, std::span<int> list_, std::uint64_t budget_, CompareMode compare_)
        : list(list_), L(static_cast<std::int64_t>(list_.size())), v(program.v), compare(compare_), budget(budget_) {
        vars[static_cast<std::size_t>(v) + 1] = L;
    }

    bool tick() {
        if (executed == budget) return false;
        ++executed;
        return true;
    }
    void write(std::uint16_t idx, std::int64_t value) {
        if (idx >= 1 && idx <= v) vars[idx] = value;
    }
    bool in_list(std::int64_t i) const { return i >= 0 && i < L; }

    void compare_swap(Statement const& s) {
        std::int64_t i = vars[s.a];
        std::int64_t j = vars[s.b];
        if (i == j || !in_list(i) || !in_list(j)) return;
        if (compare == CompareMode::index_ordered && i > j) std::swap(i, j);
        auto& x = list[static_cast<std::size_t>(i)];
        auto& y = list[static_cast<std::size_t>(j)];
        if (x > y) std::swap(x, y);
    }
};

// Set 1 with next-statement loop bodies.
class Structured {
public:
    Structured(std::vector<Statement> const& code, Machine& m) : code_(code), m_(m) {}

    bool run() {
        std::size_t pc = 0;
        while (pc < code_.size()) {
            if (!step(pc)) return false;
            pc = extent(pc);
        }
        return true;
    }

private:
    std::vector<Statement> const& code_;
    Machine& m_;

    std::size_t extent(std::size_t pc) const {
        while (pc < code_.size() && code_[pc].op == Op::For) ++pc;
        return std::min(pc + 1, code_.size());
    }

    bool step(std::size_t pc) {
        if (pc >= code_.size()) return true;
        if (!m_.tick()) return false;
        Statement const& s = code_[pc];
        if (s.op != Op::For) {
            m_.compare_swap(s);
            return true;
        }
        m_.write(s.a, m_.vars[s.b]);
        while (m_.vars[s.a] < m_.vars[s.c]) {
            if (!step(pc + 1)) return false;
            m_.write(s.a, m_.vars[s.a] + 1);
            if (!m_.tick()) return false;
        }
        return true;
    }
};

ExecStats run_frames(std::vector<Statement> const& code, Machine& m) {
    struct Frame {
        std::size_t pos;
        std::uint16_t loop;
        std::uint16_t limit;
    };
    const std::size_t len = code.size();
    std::array<Frame, 256> frame_storage;
    std::size_t frames = 0;
    auto halted = [&m] { return ExecStats{m.executed, HaltReason::budget_exceeded}; };

    std::size_t pc = 0;
    for (;;) {
        if (pc >= len) {
            if (frames == 0) return {m.executed, HaltReason::finished};
            if (!m.tick()) return halted();
            Frame const& f = frame_storage[frames - 1];
            m.write(f.loop, m.vars[f.loop] + 1);
            if (m.vars[f.loop] < m.vars[f.limit])
                pc = f.pos + 1;
            else
                --frames;
            continue;
        }
        if (!m.tick()) return halted();

        Statement const& s = code[pc];
        auto const& vars = m.vars;
        switch (s.op) {
        case Op::CompareSwap:
            m.compare_swap(s);
            ++pc;
            break;
        case Op::Swap: {
            std::int64_t i = vars[s.a];
            std::int64_t j = vars[s.b];
            if (m.in_list(i) && m.in_list(j))
                std::swap(m.list[static_cast<std::size_t>(i)], m.list[static_cast<std::size_t>(j)]);
            ++pc;
            break;
        }
        case Op::For: {
            m.write(s.a, vars[s.b]);
            // A re-executed For replaces its own frame and anything nested in it.
            for (std::size_t k = 0; k < frames; ++k) {
                if (frame_storage[k].pos == pc) {
                    frames = k;
                    break;
                }
            }
            frame_storage[frames++] = Frame{pc, s.a, s.c};
            ++pc;
            break;
        }
        case Op::IfVarLess:
            pc += vars[s.a] < vars[s.b] ? 1 : 2;
            break;
        case Op::IfListLess: {
            std::int64_t i = vars[s.a];
            std::int64_t j = vars[s.b];
            bool holds = m.in_list(i) && m.in_list(j) &&
                         m.list[static_cast<std::size_t>(i)] < m.list[static_cast<std::size_t>(j)];
            pc += holds ? 1 : 2;
            break;
        }
        case Op::IncrementVar:
            m.write(s.a, vars[s.a] + 1);
            ++pc;
            break;
        case Op::AssignVar:
            m.write(s.a, vars[s.b]);
            ++pc;
            break;
        case Op::GoTo:
            if (s.a >= len) return {m.executed, HaltReason::finished};
            pc = s.a;
            break;
        }
    }
}

} // namespace

ExecStats execute_in_place(LinearProgram const& program, std::span<int> list, std::uint64_t budget,
                           ExecOptions const& options) {
    if (program.size() > 256) throw std::invalid_argument("program longer than 256 statements");
    Machine m(program, list, budget, options.compare);
    if (options.loop == LoopMode::next_statement && program.statement_set == 1) {
        bool done = Structured(program.statements, m).run();
        return {m.executed, done ? HaltReason::finished : HaltReason::budget_exceeded};
    }
    return run_frames(program.statements, m);
}

ExecResult execute(LinearProgram const& program, std::span<const int> input, std::uint64_t budget,
                   ExecOptions const& options) {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    ExecResult r;
    r.final_list.assign(input.begin(), input.end());
    auto stats = execute_in_place(program, r.final_list, budget, options);
    r.executed = stats.executed;
    r.halt_reason = stats.halt_reason;
    return r;
}

std::uint64_t loop_budget(std::size_t list_length, BudgetModel const& model) {
    if (list_length < 1) throw std::invalid_argument("list length must be >= 1");
    auto L = static_cast<std::uint64_t>(list_length);
    auto ref = model.a * L * L + model.b * L + model.c;
    return static_cast<std::uint64_t>(std::llround(model.factor * static_cast<double>(ref)));
}

long forward_distance(std::span<const int> list) {
    long d = 0;
    for (std::size_t k = 0; k < list.size(); ++k) d += std::labs(list[k] - static_cast<long>(k + 1));
    return d;
}

long reverse_distance(std::span<const int> list) {
    long d = 0;
    const auto L = static_cast<long>(list.size());
    for (std::size_t k = 0; k < list.size(); ++k) d += std::labs(list[k] - (L - static_cast<long>(k)));
    return d;
}

double normalized_metric(long forward, long reverse) {
    if (forward + reverse == 0) return 0.0;
    return static_cast<double>(reverse - forward) / static_cast<double>(reverse + forward);
}

double sort_fitness(LinearProgram const& program, std::span<const std::vector<int>> lists, BudgetModel const& model,
                    ExecOptions const& options) {
    if (lists.empty()) throw std::invalid_argument("sort_fitness needs at least one list");
    double total = 0.0;
    std::vector<int> scratch;
    for (auto const& list : lists) {
        scratch.assign(list.begin(), list.end());
        execute_in_place(program, scratch, loop_budget(list.size(), model), options);
        total += normalized_metric(forward_distance(scratch), reverse_distance(scratch));
    }
    return total / static_cast<double>(lists.size());
}

std::pair<LinearProgram, LinearProgram> crossover_at(LinearProgram const& a, LinearProgram const& b, std::size_t cut) {
    if (a.size() != b.size() || a.statement_set != b.statement_set || a.v != b.v)
        throw std::invalid_argument("crossover parents must share length, statement set and v");
    cut = std::min(cut, a.size());
    LinearProgram c1 = a;
    LinearProgram c2 = b;
    std::swap_ranges(c1.statements.begin() + static_cast<std::ptrdiff_t>(cut), c1.statements.end(),
                     c2.statements.begin() + static_cast<std::ptrdiff_t>(cut));
    return {std::move(c1), std::move(c2)};
}

void mutate_statements(LinearProgram& program, double p, Rng& rng) {
    if (p <= 0.0) return;
    for (auto& s : program.statements)
        if (rng.chance(p)) s = random_statement(program.statement_set, program.size(), program.v, rng);
}

void mutate_one_statement(LinearProgram& program, double p, Rng& rng) {
    if (program.statements.empty() || !rng.chance(p)) return;
    program.statements[rng.below(program.size())] =
        random_statement(program.statement_set, program.size(), program.v, rng);
}

std::pair<LinearProgram, LinearProgram> crossover_linear(LinearProgram const& a, LinearProgram const& b,
                                                         double mutation_prob, Rng& rng) {
    std::size_t cut = a.size() > 1 ? 1 + rng.below(a.size() - 1) : 0;
    auto children = crossover_at(a, b, cut);
    mutate_statements(children.first, mutation_prob, rng);
    mutate_statements(children.second, mutation_prob, rng);
    return children;
}

std::string format_program(LinearProgram const& program) {
    std::ostringstream out;
    for (auto const& s : program.statements) {
        out << op_name(s.op);
        if (s.op == Op::GoTo) {
            out << ' ' << s.a;
        } else {
            std::array<std::uint16_t, 3> operands{s.a, s.b, s.c};
            for (int k = 0; k < shape(s.op).count; ++k) out << " v" << operands[k];
        }
        out << '\n';
    }
    return out.str();
}

LinearProgram parse_program(std::string_view text, int statement_set, int v) {
    LinearProgram p{statement_set, v, {}};
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream words(line);
        std::string name;
        if (!(words >> name) || name[0] == '#') continue;
        auto it = std::find(kNames.begin(), kNames.end(), name);
        if (it == kNames.end())
            throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown statement '" + name + "'");
        Statement s;
        s.op = static_cast<Op>(it - kNames.begin());
        std::array<std::uint16_t*, 3> slots{&s.a, &s.b, &s.c};
        int count = s.op == Op::GoTo ? 1 : shape(s.op).count;
        for (int k = 0; k < count; ++k) {
            std::string word;
            if (!(words >> word))
                throw std::invalid_argument("line " + std::to_string(line_no) + ": missing operand");
            std::string_view digits = word;
            if (s.op != Op::GoTo) {
                if (digits.empty() || digits[0] != 'v')
                    throw std::invalid_argument("line " + std::to_string(line_no) + ": expected vN, got '" + word + "'");
                digits.remove_prefix(1);
            }
            if (digits.empty() || digits.find_first_not_of("0123456789") != std::string_view::npos ||
                digits.size() > 5)
                throw std::invalid_argument("line " + std::to_string(line_no) + ": bad operand '" + word + "'");
            *slots[k] = static_cast<std::uint16_t>(std::stoul(std::string(digits)));
        }
        std::string extra;
        if (words >> extra && extra[0] != '#')
            throw std::invalid_argument("line " + std::to_string(line_no) + ": trailing text '" + extra + "'");
        p.statements.push_back(s);
    }
    validate(p);
    return p;
}

LinearProgram canonical_bubble_sort(int v, CompareMode compare) {
    if (v < 2) throw std::invalid_argument("the canonical sort needs two writable variables");
    auto len = static_cast<std::uint16_t>(v + 1);
    // positional: for i, for j, if list[j] > list[i] swap
    auto cs = compare == CompareMode::positional ? Statement{Op::CompareSwap, 2, 1, 0} : Statement{Op::CompareSwap, 1, 2, 0};
    return LinearProgram{1, v, {Statement{Op::For, 1, 0, len}, Statement{Op::For, 2, 0, len}, cs}};
}

std::vector<int> random_permutation(std::size_t length, Rng& rng) {
    std::vector<int> list(length);
    std::iota(list.begin(), list.end(), 1);
    rng.shuffle(std::span<int>(list));
    return list;
}

SortingSystem::SortingSystem(SortingConfig config) : config_(std::move(config)) {
    check_set(config_.statement_set);
    if (config_.v < 1 || config_.v > kMaxVariables) throw std::invalid_argument("variable count out of range");
    if (config_.program_length < 1 || config_.program_length > 256)
        throw std::invalid_argument("program length must lie in [1, 256]");
    if (config_.list_sizes.empty()) throw std::invalid_argument("at least one list size is required");
    for (auto L : config_.list_sizes)
        if (L < 2) throw std::invalid_argument("list sizes must be >= 2");
}

SortingContext SortingSystem::make_context(Rng& rng) const {
    SortingContext ctx;
    for (auto L : config_.list_sizes) ctx.lists.push_back(random_permutation(L, rng));
    return ctx;
}

LinearProgram SortingSystem::random_genome(Rng& rng) const {
    return random_program(config_.statement_set, config_.program_length, config_.v, rng);
}

double SortingSystem::fitness(LinearProgram const& program, SortingContext const& ctx) const {
    return sort_fitness(program, ctx.lists, config_.budget, config_.exec);
}

std::pair<LinearProgram, LinearProgram> SortingSystem::crossover(LinearProgram const& a, LinearProgram const& b,
                                                                 Rng& rng) const {
    std::size_t cut = a.size() > 1 ? 1 + rng.below(a.size() - 1) : 0;
    return crossover_at(a, b, cut);
}

void SortingSystem::mutate(LinearProgram& program, double mutation_prob, Rng& rng) const {
    if (config_.mutation == MutationMode::per_child)
        mutate_one_statement(program, mutation_prob, rng);
    else
        mutate_statements(program, mutation_prob, rng);
}

} // namespace evolab::linear
