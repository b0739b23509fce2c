#include "evolab/tree_gp.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "evolab/errors.hpp"

namespace evolab::tree {

namespace {

using enum Kind;

constexpr std::array<Kind, 4> kSet1{Xor, And, Or, Not};
constexpr std::array<Kind, 5> kSet2{And, Or, Nand, Nor, Not};
constexpr std::array<Kind, 3> kSet3{And, Or, Not};
constexpr std::array<Kind, 5> kSet4{Plus, Minus, Times, Divide, Negate};
constexpr std::array<Kind, 8> kSet5{Plus, Minus, Times, Divide, Negate, And, Or, Not};

constexpr std::array<std::string_view, 15> kNames{"Xor",   "And",    "Or",     "Not",   "Nand",
                                                  "Nor",   "Plus",   "Minus",  "Times", "Divide",
                                                  "Negate", "Const", "Input", "Call",  "Arg"};

void check_set(int statement_set) {
    if (statement_set < 1 || statement_set > 5) throw std::invalid_argument("tree statement set must be 1..5");
}

void check_bits(int n_bits) {
    if (n_bits < 1 || n_bits > kMaxBits) throw std::invalid_argument("n_bits must lie in [1, 20]");
}

Body& branch(TreeProgram& p, int b) { return b < 0 ? p.main : p.subroutines[static_cast<std::size_t>(b)]; }
Body const& branch(TreeProgram const& p, int b) { return b < 0 ? p.main : p.subroutines[static_cast<std::size_t>(b)]; }

// Number of subroutines callable from branch b.
std::size_t callable(TreeProgram const& p, int b) {
    return b < 0 ? p.subroutines.size() : static_cast<std::size_t>(b);
}

// Branch chosen with probability proportional to its size, then a uniform node in it.
std::pair<int, std::size_t> pick_node(TreeProgram const& p, Rng& rng) {
    std::size_t k = rng.below(p.size());
    if (k < p.main.size()) return {-1, k};
    k -= p.main.size();
    for (std::size_t i = 0; i < p.subroutines.size(); ++i) {
        if (k < p.subroutines[i].size()) return {static_cast<int>(i), k};
        k -= p.subroutines[i].size();
    }
    throw std::logic_error("pick_node: index out of range");
}

bool calls_fit(std::span<const Node> segment, std::size_t limit) {
    return std::all_of(segment.begin(), segment.end(), [limit](Node const& n) {
        return n.kind != SubCall || static_cast<std::size_t>(n.value) < limit;
    });
}

Body splice(Body const& body, std::size_t from, std::size_t to, std::span<const Node> insert) {
    Body out;
    out.reserve(body.size() - (to - from) + insert.size());
    out.insert(out.end(), body.begin(), body.begin() + static_cast<std::ptrdiff_t>(from));
    out.insert(out.end(), insert.begin(), insert.end());
    out.insert(out.end(), body.begin() + static_cast<std::ptrdiff_t>(to), body.end());
    return out;
}

struct Generator {
    int statement_set;
    int n_bits;
    int branch;
    std::size_t subroutine_count;
    Rng& rng;
    Body out;

    std::size_t callable_count() const {
        return branch < 0 ? subroutine_count : static_cast<std::size_t>(branch);
    }

    void leaf() {
        std::uint64_t options = static_cast<std::uint64_t>(n_bits) + 1 + (branch >= 0 ? kSubroutineArity : 0);
        std::uint64_t k = rng.below(options);
        if (k < static_cast<std::uint64_t>(n_bits)) {
            out.push_back({Input, static_cast<std::int8_t>(k)});
        } else if (k == static_cast<std::uint64_t>(n_bits)) {
            auto [lo, hi] = constant_range(statement_set);
            out.push_back({Const, static_cast<std::int8_t>(rng.between(lo, hi))});
        } else {
            out.push_back({Arg, static_cast<std::int8_t>(k - static_cast<std::uint64_t>(n_bits) - 1)});
        }
    }

    void grow(std::size_t size) {
        if (size == 1) {
            leaf();
            return;
        }
        auto functions = statement_set_functions(statement_set);
        if (size == 2) {
            std::vector<Kind> unary;
            for (Kind k : functions)
                if (arity(k) == 1) unary.push_back(k);
            out.push_back({unary[rng.below(unary.size())], 0});
            grow(1);
            return;
        }
        std::size_t calls = callable_count();
        std::size_t k = rng.below(functions.size() + calls);
        if (k >= functions.size()) {
            out.push_back({SubCall, static_cast<std::int8_t>(k - functions.size())});
        } else {
            out.push_back({functions[k], 0});
            if (arity(functions[k]) == 1) {
                grow(size - 1);
                return;
            }
        }
        std::size_t left = 1 + rng.below(size - 2);
        grow(left);
        grow(size - 1 - left);
    }
};

struct Evaluator {
    TreeProgram const& program;
    std::uint32_t inputs;
    bool fault = false;

    static std::int64_t wrap(std::uint64_t x) { return static_cast<std::int64_t>(x); }

    std::int64_t eval(Body const& body, std::size_t& pos, std::int64_t const* args) {
        Node const n = body[pos++];
        switch (n.kind) {
        case Const: return n.value;
        case Input: return (inputs >> n.value) & 1u;
        case Arg: return args[n.value];
        case Not: return eval(body, pos, args) == 0;
        case Negate: return wrap(0 - static_cast<std::uint64_t>(eval(body, pos, args)));
        case SubCall: {
            std::int64_t a[kSubroutineArity];
            a[0] = eval(body, pos, args);
            a[1] = eval(body, pos, args);
            std::size_t sub_pos = 0;
            return eval(program.subroutines[static_cast<std::size_t>(n.value)], sub_pos, a);
        }
        default: break;
        }
        std::int64_t x = eval(body, pos, args);
        std::int64_t y = eval(body, pos, args);
        auto ux = static_cast<std::uint64_t>(x);
        auto uy = static_cast<std::uint64_t>(y);
        switch (n.kind) {
        case Xor: return (x != 0) != (y != 0);
        case And: return x != 0 && y != 0;
        case Or: return x != 0 || y != 0;
        case Nand: return !(x != 0 && y != 0);
        case Nor: return !(x != 0 || y != 0);
        case Plus: return wrap(ux + uy);
        case Minus: return wrap(ux - uy);
        case Times: return wrap(ux * uy);
        case Divide:
            if (y == 0) {
                fault = true;
                return 0;
            }
            if (y == -1) return wrap(0 - ux);
            return x / y;
        default: throw std::logic_error("unhandled node kind");
        }
    }
};

// Rewrites every call to `target` in `body` by substituting the callee.
// Returns false when an unused argument could fault (inlining would drop it).
bool inline_calls(Body const& body, std::size_t& pos, int target, Body const& callee, Body& out) {
    Node const n = body[pos];
    if (n.kind == SubCall && n.value == target) {
        ++pos;
        Body args[kSubroutineArity];
        for (auto& a : args)
            if (!inline_calls(body, pos, target, callee, a)) return false;
        bool used[kSubroutineArity] = {false, false};
        for (Node const& c : callee) {
            if (c.kind == Arg) {
                used[c.value] = true;
                out.insert(out.end(), args[c.value].begin(), args[c.value].end());
            } else {
                out.push_back(c);
            }
        }
        for (int i = 0; i < kSubroutineArity; ++i)
            if (!used[i] && std::any_of(args[i].begin(), args[i].end(), [](Node const& x) { return x.kind == Divide; }))
                return false;
        return true;
    }
    ++pos;
    out.push_back(n);
    int k = n.kind == SubCall ? kSubroutineArity : arity(n.kind);
    for (int i = 0; i < k; ++i)
        if (!inline_calls(body, pos, target, callee, out)) return false;
    return true;
}

} // namespace

std::size_t TreeProgram::size() const {
    std::size_t n = main.size();
    for (auto const& s : subroutines) n += s.size();
    return n;
}

int arity(Kind kind) {
    switch (kind) {
    case Not:
    case Negate: return 1;
    case Const:
    case Input:
    case Arg: return 0;
    default: return 2;
    }
}

std::string_view kind_name(Kind kind) { return kNames[static_cast<std::size_t>(kind)]; }

std::span<const Kind> statement_set_functions(int statement_set) {
    check_set(statement_set);
    switch (statement_set) {
    case 1: return kSet1;
    case 2: return kSet2;
    case 3: return kSet3;
    case 4: return kSet4;
    default: return kSet5;
    }
}

std::pair<int, int> constant_range(int statement_set) {
    check_set(statement_set);
    return statement_set >= 4 ? std::pair{-3, 3} : std::pair{0, 1};
}

std::size_t subtree_end(std::span<const Node> body, std::size_t pos) {
    std::size_t need = 1;
    while (need > 0) {
        if (pos >= body.size()) throw std::invalid_argument("truncated tree");
        need += static_cast<std::size_t>(arity(body[pos].kind));
        --need;
        ++pos;
    }
    return pos;
}

void validate(TreeProgram const& program) {
    check_set(program.statement_set);
    check_bits(program.n_bits);
    if (program.subroutines.size() > kMaxSubroutines) throw std::invalid_argument("more than 4 subroutines");
    if (program.size() > kMaxNodes) throw std::invalid_argument("program exceeds 200 nodes");
    auto functions = statement_set_functions(program.statement_set);
    auto [lo, hi] = constant_range(program.statement_set);
    for (int b = -1; b < static_cast<int>(program.subroutines.size()); ++b) {
        Body const& body = branch(program, b);
        if (body.empty()) throw std::invalid_argument("empty tree");
        if (subtree_end(body, 0) != body.size()) throw std::invalid_argument("trailing nodes after tree");
        for (Node const& n : body) {
            switch (n.kind) {
            case Const:
                if (n.value < lo || n.value > hi) throw std::invalid_argument("constant out of range");
                break;
            case Input:
                if (n.value < 0 || n.value >= program.n_bits) throw std::invalid_argument("input index out of range");
                break;
            case Arg:
                if (b < 0) throw std::invalid_argument("Arg outside a subroutine body");
                if (n.value < 0 || n.value >= kSubroutineArity) throw std::invalid_argument("Arg index out of range");
                break;
            case SubCall:
                if (n.value < 0 || static_cast<std::size_t>(n.value) >= callable(program, b))
                    throw std::invalid_argument("call to an unavailable subroutine");
                break;
            default:
                if (std::find(functions.begin(), functions.end(), n.kind) == functions.end())
                    throw std::invalid_argument("node kind outside the statement set");
            }
        }
    }
}

std::optional<std::int64_t> eval_value(TreeProgram const& program, std::uint32_t inputs) {
    Evaluator e{program, inputs};
    std::size_t pos = 0;
    std::int64_t v = e.eval(program.main, pos, nullptr);
    if (e.fault) return std::nullopt;
    return v;
}

std::optional<int> eval_tree(TreeProgram const& program, std::uint32_t inputs, OutputRule rule) {
    auto v = eval_value(program, inputs);
    if (!v) return std::nullopt;
    if (rule == OutputRule::mod2) return static_cast<int>(*v & 1);
    return *v != 0 ? 1 : 0;
}

int parity_bit(std::uint32_t inputs) { return std::popcount(inputs) & 1; }

int parity_fitness(TreeProgram const& program, OutputRule rule) {
    check_bits(program.n_bits);
    int correct = 0;
    const std::uint32_t cases = 1u << program.n_bits;
    for (std::uint32_t x = 0; x < cases; ++x) {
        auto out = eval_tree(program, x, rule);
        if (out && *out == parity_bit(x)) ++correct;
    }
    return correct;
}

LengthDistribution LengthDistribution::seed_default() {
    LengthDistribution d;
    for (std::size_t len = 1; len <= kMaxNodes; ++len) {
        double w = 0.0;
        if (len >= 10 && len <= 50)
            w = 1.0;
        else if (len > 50 && len < 100)
            w = static_cast<double>(100 - len) / 50.0;
        d.buckets[bucket_of(len)] += w;
    }
    d.normalize();
    return d;
}

LengthDistribution LengthDistribution::from_samples(std::span<const std::size_t> lengths,
                                                    std::span<const std::size_t> subroutine_counts) {
    if (lengths.empty()) throw std::invalid_argument("from_samples: no lengths");
    LengthDistribution d;
    for (auto len : lengths) d.buckets[bucket_of(len)] += 1.0;
    if (!subroutine_counts.empty()) {
        d.subroutines.emplace();
        d.subroutines->fill(0.0);
        for (auto k : subroutine_counts) (*d.subroutines)[std::min(k, kMaxSubroutines)] += 1.0;
    }
    d.normalize();
    return d;
}

std::size_t LengthDistribution::bucket_of(std::size_t length) {
    if (length < 1) throw std::invalid_argument("program length must be >= 1");
    return std::min(kBuckets - 1, (length - 1) / kBucketWidth);
}

void LengthDistribution::normalize() {
    auto norm = [](auto& hist) {
        double total = 0.0;
        for (double w : hist) {
            if (!(w >= 0.0)) throw std::invalid_argument("negative histogram weight");
            total += w;
        }
        if (!(total > 0.0)) throw std::invalid_argument("histogram has no mass");
        for (double& w : hist) w /= total;
    };
    norm(buckets);
    if (subroutines) norm(*subroutines);
}

std::size_t LengthDistribution::sample_length(Rng& rng) const {
    double u = rng.uniform();
    std::size_t b = 0;
    for (; b + 1 < kBuckets; ++b) {
        if (u < buckets[b]) break;
        u -= buckets[b];
    }
    while (buckets[b] <= 0.0 && b > 0) --b;
    return b * kBucketWidth + 1 + rng.below(kBucketWidth);
}

std::size_t LengthDistribution::sample_subroutines(Rng& rng) const {
    if (!subroutines) return 0;
    double u = rng.uniform();
    std::size_t k = 0;
    for (; k < kMaxSubroutines; ++k) {
        if (u < (*subroutines)[k]) break;
        u -= (*subroutines)[k];
    }
    while ((*subroutines)[k] <= 0.0 && k > 0) --k;
    return k;
}

double total_variation(LengthDistribution const& a, LengthDistribution const& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < LengthDistribution::kBuckets; ++i) d += std::abs(a.buckets[i] - b.buckets[i]);
    d *= 0.5;
    if (a.subroutines && b.subroutines) {
        double s = 0.0;
        for (std::size_t i = 0; i <= kMaxSubroutines; ++i) s += std::abs((*a.subroutines)[i] - (*b.subroutines)[i]);
        d = std::max(d, 0.5 * s);
    }
    return d;
}

LengthDistribution blend(LengthDistribution const& a, LengthDistribution const& b, double weight_b) {
    if (weight_b < 0.0 || weight_b > 1.0) throw std::invalid_argument("blend weight must lie in [0,1]");
    LengthDistribution out;
    for (std::size_t i = 0; i < LengthDistribution::kBuckets; ++i)
        out.buckets[i] = (1.0 - weight_b) * a.buckets[i] + weight_b * b.buckets[i];
    if (a.subroutines && b.subroutines) {
        out.subroutines.emplace();
        for (std::size_t i = 0; i <= kMaxSubroutines; ++i)
            (*out.subroutines)[i] = (1.0 - weight_b) * (*a.subroutines)[i] + weight_b * (*b.subroutines)[i];
    } else {
        out.subroutines = a.subroutines ? a.subroutines : b.subroutines;
    }
    out.normalize();
    return out;
}

Body random_body(int statement_set, int n_bits, std::size_t size, int branch_index, std::size_t subroutine_count,
                 Rng& rng) {
    check_set(statement_set);
    check_bits(n_bits);
    if (size < 1 || size > kMaxNodes) throw std::invalid_argument("tree size must lie in [1, 200]");
    Generator g{statement_set, n_bits, branch_index, subroutine_count, rng, {}};
    g.out.reserve(size);
    g.grow(size);
    return std::move(g.out);
}

TreeProgram random_tree(int statement_set, int n_bits, std::size_t total_size, std::size_t subroutine_count,
                        Rng& rng) {
    if (total_size < 1 || total_size > kMaxNodes) throw std::invalid_argument("tree size must lie in [1, 200]");
    if (subroutine_count > kMaxSubroutines) throw std::invalid_argument("more than 4 subroutines");
    subroutine_count = std::min(subroutine_count, total_size - 1);

    // Uniform composition of total_size into subroutine_count + 1 positive parts.
    std::vector<std::size_t> cuts;
    while (cuts.size() < subroutine_count) {
        std::size_t c = 1 + rng.below(total_size - 1);
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(total_size);

    TreeProgram p{statement_set, n_bits, {}, {}};
    std::size_t prev = 0;
    p.main = random_body(statement_set, n_bits, cuts[0], -1, subroutine_count, rng);
    prev = cuts[0];
    for (std::size_t i = 0; i < subroutine_count; ++i) {
        p.subroutines.push_back(
            random_body(statement_set, n_bits, cuts[i + 1] - prev, static_cast<int>(i), subroutine_count, rng));
        prev = cuts[i + 1];
    }
    return p;
}

TreeProgram random_tree(int statement_set, int n_bits, LengthDistribution const& law, bool allow_subroutines,
                        Rng& rng) {
    std::size_t len = law.sample_length(rng);
    std::size_t subs = allow_subroutines ? law.sample_subroutines(rng) : 0;
    return random_tree(statement_set, n_bits, len, subs, rng);
}

// Koza's point choice: an operator node with probability `internal_bias`
// (when the branch has one), otherwise a leaf.
std::size_t pick_point(Body const& body, double internal_bias, Rng& rng) {
    if (internal_bias <= 0.0) return rng.below(body.size());
    bool internal = rng.chance(internal_bias);
    std::size_t count = 0;
    for (Node const& n : body) count += (arity(n.kind) > 0) == internal;
    if (count == 0) return rng.below(body.size());
    std::size_t k = rng.below(count);
    for (std::size_t i = 0;; ++i)
        if ((arity(body[i].kind) > 0) == internal && k-- == 0) return i;
}

std::pair<TreeProgram, TreeProgram> subtree_crossover(TreeProgram const& a, TreeProgram const& b, Rng& rng,
                                                      double internal_bias) {
    if (a.statement_set != b.statement_set || a.n_bits != b.n_bits)
        throw std::invalid_argument("crossover parents must share statement set and n_bits");
    constexpr int kAttempts = 16;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        int br = pick_node(a, rng).first;
        if (br >= static_cast<int>(b.subroutines.size())) continue;
        Body const& body_a = branch(a, br);
        Body const& body_b = branch(b, br);
        std::size_t pa = pick_point(body_a, internal_bias, rng);
        std::size_t pb = pick_point(body_b, internal_bias, rng);
        std::size_t ea = subtree_end(body_a, pa);
        std::size_t eb = subtree_end(body_b, pb);
        std::span<const Node> seg_a(body_a.data() + pa, ea - pa);
        std::span<const Node> seg_b(body_b.data() + pb, eb - pb);
        if (!calls_fit(seg_b, callable(a, br)) || !calls_fit(seg_a, callable(b, br))) continue;

        TreeProgram c1 = a;
        TreeProgram c2 = b;
        branch(c1, br) = splice(body_a, pa, ea, seg_b);
        branch(c2, br) = splice(body_b, pb, eb, seg_a);
        if (c1.size() > kMaxNodes) c1 = a;
        if (c2.size() > kMaxNodes) c2 = b;
        return {std::move(c1), std::move(c2)};
    }
    return {a, b};
}

void subtree_mutation(TreeProgram& program, Rng& rng) {
    auto [br, pos] = pick_node(program, rng);
    Body& body = branch(program, br);
    std::size_t end = subtree_end(body, pos);
    std::size_t room = kMaxNodes - (program.size() - (end - pos));
    std::size_t size = 1 + rng.below(std::min<std::size_t>(20, room));
    Body fresh = random_body(program.statement_set, program.n_bits, size, br, program.subroutines.size(), rng);
    body = splice(body, pos, end, fresh);
}

bool create_subroutine(TreeProgram& program, Rng& rng) {
    if (program.subroutines.size() >= kMaxSubroutines) return false;
    if (program.size() + 3 > kMaxNodes) return false;
    std::vector<std::size_t> internal;
    for (std::size_t i = 0; i < program.main.size(); ++i)
        if (arity(program.main[i].kind) > 0) internal.push_back(i);
    if (internal.empty()) return false;

    std::size_t pos = internal[rng.below(internal.size())];
    std::size_t end = subtree_end(program.main, pos);
    Body sub(program.main.begin() + static_cast<std::ptrdiff_t>(pos),
             program.main.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<std::size_t> leaves;
    for (std::size_t i = 0; i < sub.size(); ++i)
        if (arity(sub[i].kind) == 0) leaves.push_back(i);
    rng.shuffle(std::span<std::size_t>(leaves));

    Node passed[kSubroutineArity] = {{Const, 0}, {Const, 0}};
    for (std::size_t k = 0; k < std::min<std::size_t>(kSubroutineArity, leaves.size()); ++k) {
        passed[k] = sub[leaves[k]];
        sub[leaves[k]] = Node{Arg, static_cast<std::int8_t>(k)};
    }
    auto index = static_cast<std::int8_t>(program.subroutines.size());
    Node call[3] = {{SubCall, index}, passed[0], passed[1]};
    program.main = splice(program.main, pos, end, call);
    program.subroutines.push_back(std::move(sub));
    return true;
}

bool duplicate_subroutine(TreeProgram& program, Rng& rng) {
    std::size_t count = program.subroutines.size();
    if (count == 0 || count >= kMaxSubroutines) return false;
    std::size_t i = rng.below(count);
    if (program.size() + program.subroutines[i].size() > kMaxNodes) return false;
    program.subroutines.push_back(program.subroutines[i]);
    for (Node& n : program.main)
        if (n.kind == SubCall && static_cast<std::size_t>(n.value) == i && rng.chance(0.5))
            n.value = static_cast<std::int8_t>(count);
    return true;
}

bool delete_subroutine(TreeProgram& program, Rng& rng) {
    std::size_t count = program.subroutines.size();
    if (count == 0) return false;
    auto target = static_cast<int>(rng.below(count));
    Body const& callee = program.subroutines[static_cast<std::size_t>(target)];

    TreeProgram out{program.statement_set, program.n_bits, {}, {}};
    for (int b = -1; b < static_cast<int>(count); ++b) {
        if (b == target) continue;
        Body const& body = branch(program, b);
        Body rewritten;
        std::size_t pos = 0;
        if (b > target || b < 0) {
            if (!inline_calls(body, pos, target, callee, rewritten)) return false;
        } else {
            rewritten = body;
        }
        for (Node& n : rewritten)
            if (n.kind == SubCall && n.value > target) --n.value;
        if (b < 0)
            out.main = std::move(rewritten);
        else
            out.subroutines.push_back(std::move(rewritten));
    }
    if (out.size() > kMaxNodes) return false;
    program = std::move(out);
    return true;
}

void architecture_events(TreeProgram& program, ArchitectureProbs const& probs, Rng& rng) {
    if (rng.chance(probs.create)) create_subroutine(program, rng);
    if (rng.chance(probs.duplicate)) duplicate_subroutine(program, rng);
    if (rng.chance(probs.remove)) delete_subroutine(program, rng);
}

namespace {

void write_tree(std::ostream& out, Body const& body, std::size_t& pos) {
    Node const n = body[pos++];
    out << '(' << kind_name(n.kind);
    if (arity(n.kind) == 0 || n.kind == SubCall) out << ' ' << static_cast<int>(n.value);
    int k = n.kind == SubCall ? kSubroutineArity : arity(n.kind);
    for (int i = 0; i < k; ++i) {
        out << ' ';
        write_tree(out, body, pos);
    }
    out << ')';
}

struct Parser {
    std::string_view text;
    std::size_t at = 0;

    void skip() {
        while (at < text.size() && std::isspace(static_cast<unsigned char>(text[at]))) ++at;
    }
    bool peek(char c) {
        skip();
        return at < text.size() && text[at] == c;
    }
    void expect(char c) {
        if (!peek(c)) throw std::invalid_argument(std::string("tree text: expected '") + c + "'");
        ++at;
    }
    std::string_view atom() {
        skip();
        std::size_t start = at;
        while (at < text.size() && !std::isspace(static_cast<unsigned char>(text[at])) && text[at] != '(' &&
               text[at] != ')')
            ++at;
        if (start == at) throw std::invalid_argument("tree text: expected a token");
        return text.substr(start, at - start);
    }
    int integer() {
        auto tok = atom();
        std::size_t used = 0;
        int v = std::stoi(std::string(tok), &used);
        if (used != tok.size()) throw std::invalid_argument("tree text: bad integer");
        if (v < -128 || v > 127) throw std::invalid_argument("tree text: integer out of range");
        return v;
    }

    void node(Body& out) {
        expect('(');
        auto name = atom();
        auto it = std::find(kNames.begin(), kNames.end(), name);
        if (it == kNames.end()) throw std::invalid_argument("tree text: unknown node " + std::string(name));
        auto kind = static_cast<Kind>(it - kNames.begin());
        Node n{kind, 0};
        if (arity(kind) == 0 || kind == SubCall) n.value = static_cast<std::int8_t>(integer());
        out.push_back(n);
        int k = kind == SubCall ? kSubroutineArity : arity(kind);
        for (int i = 0; i < k; ++i) node(out);
        expect(')');
    }
};

} // namespace

std::string format_tree(TreeProgram const& program) {
    std::ostringstream out;
    std::size_t pos = 0;
    write_tree(out, program.main, pos);
    out << '\n';
    for (std::size_t i = 0; i < program.subroutines.size(); ++i) {
        out << "(Sub " << i << ' ';
        pos = 0;
        write_tree(out, program.subroutines[i], pos);
        out << ")\n";
    }
    return out.str();
}

TreeProgram parse_tree(std::string_view text, int statement_set, int n_bits) {
    TreeProgram p{statement_set, n_bits, {}, {}};
    Parser ps{text};
    ps.node(p.main);
    while (ps.peek('(')) {
        ps.expect('(');
        if (ps.atom() != "Sub") throw std::invalid_argument("tree text: expected (Sub i ...)");
        if (ps.integer() != static_cast<int>(p.subroutines.size()))
            throw std::invalid_argument("tree text: subroutines must be numbered in order");
        p.subroutines.emplace_back();
        ps.node(p.subroutines.back());
        ps.expect(')');
    }
    ps.skip();
    if (ps.at != text.size()) throw std::invalid_argument("tree text: trailing characters");
    validate(p);
    return p;
}

ParitySystem::ParitySystem(ParityConfig config) : config_(std::move(config)) {
    check_set(config_.statement_set);
    check_bits(config_.n_bits);
    config_.lengths.normalize();
}

TreeProgram ParitySystem::random_genome(Rng& rng) const {
    return random_tree(config_.statement_set, config_.n_bits, config_.lengths, config_.subroutines, rng);
}

double ParitySystem::fitness(TreeProgram const& program, EmptyContext const&) const {
    return parity_fitness(program, config_.output_rule);
}

std::pair<TreeProgram, TreeProgram> ParitySystem::crossover(TreeProgram const& a, TreeProgram const& b,
                                                            Rng& rng) const {
    return subtree_crossover(a, b, rng, config_.internal_bias);
}

void ParitySystem::mutate(TreeProgram& program, double mutation_prob, Rng& rng) const {
    if (rng.chance(mutation_prob)) subtree_mutation(program, rng);
    if (config_.subroutines) architecture_events(program, config_.architecture, rng);
}

SelfConsistentResult iterate_self_consistent(LengthDistribution start, WorkingSampler const& sampler,
                                             SelfConsistentOptions const& options, std::uint64_t seed) {
    if (options.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    start.normalize();
    SelfConsistentResult result{start, {}, false};
    for (int it = 0; it < options.max_iterations; ++it) {
        auto shapes = sampler(result.distribution, split_seed(seed, static_cast<std::uint64_t>(it)));
        if (shapes.size() < options.min_working)
            throw InsufficientDataError("self-consistency: only " + std::to_string(shapes.size()) +
                                        " working programs in iteration " + std::to_string(it + 1));
        std::vector<std::size_t> lengths;
        std::vector<std::size_t> subs;
        for (auto const& s : shapes) {
            lengths.push_back(s.length);
            subs.push_back(s.subroutines);
        }
        auto observed = result.distribution.subroutines ? LengthDistribution::from_samples(lengths, subs)
                                                        : LengthDistribution::from_samples(lengths);
        auto next = blend(result.distribution, observed, options.blend_weight);
        double d = total_variation(result.distribution, next);
        result.distances.push_back(d);
        result.distribution = next;
        if (d < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    return result;
}

SelfConsistentResult self_consistent_distribution(ParityConfig config, EvolutionParams const& params,
                                                  std::size_t evolutions, std::uint64_t seed,
                                                  SelfConsistentOptions const& options, std::size_t jobs) {
    if (config.subroutines && !config.lengths.subroutines) {
        config.lengths.subroutines.emplace();
        config.lengths.subroutines->fill(1.0 / static_cast<double>(kMaxSubroutines + 1));
    }
    auto sampler = [&](LengthDistribution const& law, std::uint64_t s) {
        ParityConfig c = config;
        c.lengths = law;
        ParitySystem system(c);
        auto summary = run(system, params, evolutions, s, jobs);
        std::vector<ProgramShape> shapes;
        for (auto const& o : summary.per_evolution)
            if (o.succeeded) shapes.push_back({o.best_genome.size(), o.best_genome.subroutines.size()});
        return shapes;
    };
    return iterate_self_consistent(config.lengths, sampler, options, seed);
}

} // namespace evolab::tree
