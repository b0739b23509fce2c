#include "evolab/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "evolab/density.hpp"
#include "evolab/errors.hpp"

namespace evolab {

namespace {

constexpr std::array<std::string_view, 9> kSystems{"sort_linear", "parity_tree",    "gaussian",
                                                   "highest",     "linear",         "binary",
                                                   "twisted_binary", "twisted_linear", "twisted_gaussian"};

const std::set<std::string> kTopKeys{"system", "master_seed", "evolutions", "params", "engine", "density",
                                     "kprime_delta", "points", "output", "selfconsist", "description"};
const std::set<std::string> kEngineKeys{"population_size", "parent_count", "tournament_size", "mutation_prob",
                                        "selection", "crossover_rate", "generation_cap", "keep_parents"};
const std::set<std::string> kDensityKeys{"method", "target_hits", "max_samples"};
const std::set<std::string> kSelfConsistKeys{"blend_weight", "tolerance", "max_iterations", "min_working"};
// Array-valued parameters that are values, not sweeps.
const std::set<std::string> kListParams{"list_sizes", "length_weights", "subroutine_weights"};

bool is_real_system(std::string_view s) {
    return s == "gaussian" || s == "linear" || s == "twisted_linear" || s == "twisted_gaussian";
}
bool is_int_system(std::string_view s) { return s == "highest" || s == "binary" || s == "twisted_binary"; }

Json system_defaults(std::string_view system) {
    Json d;
    if (system == "sort_linear") {
        d["params"] = {{"statement_set", 1},         {"v", 2},
                       {"program_length", 5},        {"list_sizes", {10, 30, 50}},
                       {"budget_factor", 10.0},      {"loop_mode", "next_statement"},
                       {"compare_mode", "positional"}, {"mutation_mode", "per_child"}};
        d["engine"] = {{"population_size", 20}, {"parent_count", 4}, {"mutation_prob", 0.2},
                       {"selection", "truncation"}};
    } else if (system == "parity_tree") {
        d["params"] = {{"statement_set", 1},    {"n_bits", 4},          {"termination", nullptr},
                       {"subroutines", false},  {"output_rule", "nonzero"}, {"internal_bias", 0.0},
                       {"create_prob", 0.005},  {"duplicate_prob", 0.005}, {"delete_prob", 0.005}};
        d["engine"] = {{"population_size", 1000}, {"mutation_prob", 0.01}, {"selection", "tournament"}};
    } else if (system == "highest") {
        d["params"] = {{"n", 2}, {"p", 50}, {"crossover", true}};
    } else if (system == "binary" || system == "twisted_binary") {
        d["params"] = {{"n", 2}, {"b", 3}, {"termination", nullptr}, {"crossover", true}};
    } else {
        d["params"] = {{"n", 2}, {"termination", nullptr}, {"scale_base", 1.5}, {"rotation_degrees", 45.0},
                       {"crossover", true}};
    }
    if (system != "sort_linear" && system != "parity_tree")
        d["engine"] = {{"population_size", 20}, {"parent_count", 4}, {"mutation_prob", 0.01},
                       {"selection", "truncation"}};
    Json engine = {{"population_size", 20}, {"parent_count", 4},  {"tournament_size", 7},
                   {"mutation_prob", 0.2},  {"selection", "truncation"}, {"crossover_rate", 0.9},
                   {"generation_cap", 100000000}, {"keep_parents", false}};
    engine.merge_patch(d["engine"]);
    d["engine"] = engine;
    d["density"] = {{"method", "auto"}, {"target_hits", nullptr}, {"max_samples", 100000000}};
    d["selfconsist"] = {{"blend_weight", 0.5}, {"tolerance", 0.05}, {"max_iterations", 10}, {"min_working", 10}};
    d["kprime_delta"] = nullptr;
    d["evolutions"] = 100;
    return d;
}

std::set<std::string> param_keys(std::string_view system) {
    Json d = system_defaults(system)["params"];
    std::set<std::string> keys;
    for (auto const& [k, _] : d.items()) keys.insert(k);
    if (system == "parity_tree") {
        keys.insert("length_weights");
        keys.insert("subroutine_weights");
    }
    return keys;
}

[[noreturn]] void fail(std::string const& msg) { throw ConfigError(msg); }

void check_keys(Json const& obj, std::set<std::string> const& allowed, std::string const& where) {
    if (!obj.is_object()) fail(where + " must be an object");
    for (auto const& [k, _] : obj.items())
        if (!allowed.contains(k)) fail("unknown key '" + k + "' in " + where);
}

template <class T>
T get(Json const& obj, std::string const& key, std::string const& where) {
    try {
        return obj.at(key).get<T>();
    } catch (nlohmann::json::exception const&) {
        fail(where + "." + key + " has the wrong type");
    }
}

int get_int(Json const& obj, std::string const& key, std::string const& where) {
    auto const& v = obj.at(key);
    if (!v.is_number_integer()) {
        if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return static_cast<int>(v.get<double>());
        fail(where + "." + key + " must be an integer");
    }
    return v.get<int>();
}

std::uint64_t get_u64(Json const& obj, std::string const& key, std::string const& where) {
    auto const& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float() && v.get<double>() >= 0 && std::floor(v.get<double>()) == v.get<double>())
        return static_cast<std::uint64_t>(v.get<double>());
    fail(where + "." + key + " must be a non-negative integer");
}

// Cartesian product over the sweep arrays of params and engine.
void expand_sweeps(Json const& point, std::vector<Json>& out) {
    for (auto section : {"params", "engine"}) {
        for (auto const& [k, v] : point[section].items()) {
            if (!v.is_array() || kListParams.contains(k)) continue;
            if (v.empty()) fail(std::string(section) + "." + k + " sweep is empty");
            for (auto const& value : v) {
                Json next = point;
                next[section][k] = value;
                expand_sweeps(next, out);
            }
            return;
        }
    }
    out.push_back(point);
}

double termination_of(Json const& point) {
    auto system = system_of(point);
    Json const& p = point["params"];
    if (system == "sort_linear") return 1.0;
    if (system == "highest") return get_int(p, "n", "params");
    auto const& t = p.at("termination");
    if (!t.is_null()) return get<double>(p, "termination", "params");
    if (system == "parity_tree") return std::ldexp(1.0, get_int(p, "n_bits", "params"));
    if (system == "binary" || system == "twisted_binary")
        return get_int(p, "n", "params") * std::ldexp(1.0, get_int(p, "b", "params") - 1);
    fail(std::string(system) + " needs params.termination");
}

bool has_analytic(std::string_view system) {
    return system == "gaussian" || system == "twisted_gaussian" || system == "highest";
}

template <class F>
decltype(auto) with_system(Json const& point, F&& f) {
    auto system = system_of(point);
    if (system == "sort_linear") return f(linear::SortingSystem(sorting_config(point)));
    if (system == "parity_tree") return f(tree::ParitySystem(parity_config(point)));
    if (is_real_system(system)) return f(vec::RealVectorSystem(real_vector_config(point)));
    return f(vec::IntVectorSystem(int_vector_config(point)));
}

std::uint64_t point_seed(Json const& point) {
    Json key = {{"system", point["system"]}, {"params", point["params"]}, {"engine", point["engine"]}};
    return split_seed(point["master_seed"].get<std::uint64_t>(), fnv1a(key.dump()));
}

std::uint64_t default_target_hits(Json const& point) {
    auto system = system_of(point);
    if (system == "parity_tree") return 100;
    if (system == "sort_linear" && get_int(point["params"], "statement_set", "params") != 1) return 100;
    return 1000;
}

std::string resolved_method(Json const& point) {
    auto method = point["density"]["method"].get<std::string>();
    auto system = system_of(point);
    if (method != "auto") return method;
    if (has_analytic(system)) return "analytic";
    if (is_int_system(system)) {
        auto size = space_size(vec::IntVectorSystem(int_vector_config(point)));
        if (size && *size <= kEnumerationLimit) return "enumeration";
    }
    return "monte_carlo";
}

DensityEstimate measure_density(Json const& point, std::string const& method, std::size_t jobs) {
    auto system = system_of(point);
    Json const& p = point["params"];
    double t = termination_of(point);
    if (method == "analytic") {
        int n = get_int(p, "n", "params");
        if (system == "gaussian") return gaussian_density(n, t);
        if (system == "twisted_gaussian") return twisted_gaussian_density(n, t, get<double>(p, "scale_base", "params"));
        return highest_density(n, get_int(p, "p", "params"));
    }
    if (method == "enumeration") return enumerate_density(vec::IntVectorSystem(int_vector_config(point)), t);
    MonteCarloOptions mc;
    auto const& hits = point["density"]["target_hits"];
    mc.target_hits = hits.is_null() ? default_target_hits(point) : get_u64(point["density"], "target_hits", "density");
    mc.max_samples = get_u64(point["density"], "max_samples", "density");
    mc.jobs = jobs;
    std::uint64_t seed = split_seed(point_seed(point), 0xd1ce);
    return with_system(point, [&](auto const& sys) { return monte_carlo_density(working_trial(sys, t), mc, seed); });
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

Json parse_config(std::string_view text) {
    try {
        return Json::parse(text, nullptr, true, true);
    } catch (nlohmann::json::parse_error const& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
}

Json load_config(std::string const& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_override(Json& config, std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) fail("--set expects key=value, got '" + std::string(assignment) + "'");
    std::string path(assignment.substr(0, eq));
    std::string text(assignment.substr(eq + 1));
    Json value;
    try {
        value = Json::parse(text);
    } catch (nlohmann::json::parse_error const&) {
        value = text;
    }
    Json* node = &config;
    std::size_t start = 0;
    for (;;) {
        auto dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) fail("--set: empty key in '" + path + "'");
        if (!node->is_object()) fail("--set: '" + path + "' does not name an object member");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = Json::object();
        start = dot + 1;
    }
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(Json const& config) {
    Json c = config;
    c.erase("output");
    return hex64(fnv1a(c.dump()));
}

std::string_view system_of(Json const& point) { return point.at("system").get_ref<std::string const&>(); }

std::vector<Json> expand_points(Json const& config) {
    check_keys(config, kTopKeys, "config");
    if (!config.contains("system") || !config["system"].is_string()) fail("config.system must be a string");
    if (!config.contains("master_seed")) fail("config.master_seed is required");
    get_u64(config, "master_seed", "config");

    Json base = config;
    base.erase("points");
    base.erase("output");
    base.erase("description");
    std::vector<Json> variants;
    if (config.contains("points")) {
        if (!config["points"].is_array() || config["points"].empty()) fail("config.points must be a non-empty array");
        for (auto const& patch : config["points"]) {
            if (!patch.is_object()) fail("each entry of config.points must be an object");
            if (patch.contains("system") && patch["system"] != config["system"])
                fail("all points must share one system");
            if (patch.contains("master_seed") || patch.contains("points"))
                fail("points may not override master_seed or nest points");
            Json v = base;
            v.merge_patch(patch);
            variants.push_back(std::move(v));
        }
    } else {
        variants.push_back(base);
    }

    std::vector<Json> points;
    for (auto& v : variants) {
        auto system = v["system"].get<std::string>();
        if (std::find(kSystems.begin(), kSystems.end(), system) == kSystems.end()) fail("unknown system '" + system + "'");
        Json full = system_defaults(system);
        full["system"] = system;
        full["master_seed"] = v["master_seed"];
        for (auto section : {"params", "engine", "density", "selfconsist"}) {
            if (!v.contains(section)) continue;
            auto const& allowed = std::string(section) == "params"   ? param_keys(system)
                                  : std::string(section) == "engine" ? kEngineKeys
                                  : std::string(section) == "density" ? kDensityKeys
                                                                      : kSelfConsistKeys;
            check_keys(v[section], allowed, section);
            full[section].merge_patch(v[section]);
            // merge_patch drops nulls; keep explicit defaults present
            for (auto const& k : allowed)
                if (!full[section].contains(k) && system_defaults(system)[section].contains(k))
                    full[section][k] = system_defaults(system)[section][k];
        }
        if (v.contains("evolutions")) full["evolutions"] = v["evolutions"];
        if (v.contains("kprime_delta")) full["kprime_delta"] = v["kprime_delta"];
        expand_sweeps(full, points);
    }
    return points;
}

EvolutionParams engine_params(Json const& point) {
    Json const& e = point.at("engine");
    EvolutionParams ep;
    ep.population_size = get_u64(e, "population_size", "engine");
    ep.parent_count = get_u64(e, "parent_count", "engine");
    ep.tournament_size = get_u64(e, "tournament_size", "engine");
    ep.mutation_prob = get<double>(e, "mutation_prob", "engine");
    auto sel = get<std::string>(e, "selection", "engine");
    if (sel == "truncation")
        ep.selection = Selection::truncation;
    else if (sel == "tournament")
        ep.selection = Selection::tournament;
    else
        fail("engine.selection must be truncation or tournament");
    ep.crossover_rate = get<double>(e, "crossover_rate", "engine");
    ep.generation_cap = get_u64(e, "generation_cap", "engine");
    ep.keep_parents = get<bool>(e, "keep_parents", "engine");
    ep.termination_value = termination_of(point);
    try {
        ep.validate();
    } catch (std::invalid_argument const& ex) {
        fail(std::string("engine: ") + ex.what());
    }
    return ep;
}

linear::SortingConfig sorting_config(Json const& point) {
    Json const& p = point.at("params");
    linear::SortingConfig c;
    c.statement_set = get_int(p, "statement_set", "params");
    c.v = get_int(p, "v", "params");
    int len = get_int(p, "program_length", "params");
    if (len < 1) fail("params.program_length must be >= 1");
    c.program_length = static_cast<std::size_t>(len);
    c.list_sizes = get<std::vector<std::size_t>>(p, "list_sizes", "params");
    c.budget.factor = get<double>(p, "budget_factor", "params");
    if (!(c.budget.factor > 0)) fail("params.budget_factor must be positive");
    auto loop = get<std::string>(p, "loop_mode", "params");
    if (loop == "next_statement")
        c.exec.loop = linear::LoopMode::next_statement;
    else if (loop == "frame")
        c.exec.loop = linear::LoopMode::frame;
    else
        fail("params.loop_mode must be next_statement or frame");
    auto cmp = get<std::string>(p, "compare_mode", "params");
    if (cmp == "positional")
        c.exec.compare = linear::CompareMode::positional;
    else if (cmp == "index_ordered")
        c.exec.compare = linear::CompareMode::index_ordered;
    else
        fail("params.compare_mode must be positional or index_ordered");
    auto mut = get<std::string>(p, "mutation_mode", "params");
    if (mut == "per_child")
        c.mutation = linear::MutationMode::per_child;
    else if (mut == "per_statement")
        c.mutation = linear::MutationMode::per_statement;
    else
        fail("params.mutation_mode must be per_child or per_statement");
    return c;
}

tree::ParityConfig parity_config(Json const& point) {
    Json const& p = point.at("params");
    tree::ParityConfig c;
    c.statement_set = get_int(p, "statement_set", "params");
    c.n_bits = get_int(p, "n_bits", "params");
    c.subroutines = get<bool>(p, "subroutines", "params");
    auto rule = get<std::string>(p, "output_rule", "params");
    if (rule == "nonzero")
        c.output_rule = tree::OutputRule::nonzero;
    else if (rule == "mod2")
        c.output_rule = tree::OutputRule::mod2;
    else
        fail("params.output_rule must be nonzero or mod2");
    c.internal_bias = get<double>(p, "internal_bias", "params");
    c.architecture = {get<double>(p, "create_prob", "params"), get<double>(p, "duplicate_prob", "params"),
                      get<double>(p, "delete_prob", "params")};
    if (p.contains("length_weights")) {
        auto w = get<std::vector<double>>(p, "length_weights", "params");
        if (w.size() != tree::LengthDistribution::kBuckets)
            fail("params.length_weights needs " + std::to_string(tree::LengthDistribution::kBuckets) + " entries");
        std::copy(w.begin(), w.end(), c.lengths.buckets.begin());
    }
    if (p.contains("subroutine_weights")) {
        auto w = get<std::vector<double>>(p, "subroutine_weights", "params");
        if (w.size() != tree::kMaxSubroutines + 1) fail("params.subroutine_weights needs 5 entries");
        c.lengths.subroutines.emplace();
        std::copy(w.begin(), w.end(), c.lengths.subroutines->begin());
    }
    try {
        c.lengths.normalize();
    } catch (std::invalid_argument const& ex) {
        fail(std::string("params.length_weights: ") + ex.what());
    }
    return c;
}

vec::RealVectorConfig real_vector_config(Json const& point) {
    Json const& p = point.at("params");
    auto system = system_of(point);
    vec::RealVectorConfig c;
    c.kind = system == "gaussian"         ? vec::RealKind::gaussian
             : system == "linear"         ? vec::RealKind::linear
             : system == "twisted_linear" ? vec::RealKind::twisted_linear
                                          : vec::RealKind::twisted_gaussian;
    c.n = get_int(p, "n", "params");
    c.twist.scale_base = get<double>(p, "scale_base", "params");
    c.twist.angle = get<double>(p, "rotation_degrees", "params") * std::acos(-1.0) / 180.0;
    c.crossover = get<bool>(p, "crossover", "params");
    return c;
}

vec::IntVectorConfig int_vector_config(Json const& point) {
    Json const& p = point.at("params");
    auto system = system_of(point);
    vec::IntVectorConfig c;
    c.kind = system == "highest" ? vec::IntKind::highest
             : system == "binary" ? vec::IntKind::binary
                                  : vec::IntKind::twisted_binary;
    c.n = get_int(p, "n", "params");
    if (c.kind == vec::IntKind::highest)
        c.p = get_int(p, "p", "params");
    else
        c.b = get_int(p, "b", "params");
    c.crossover = get<bool>(p, "crossover", "params");
    return c;
}

tree::SelfConsistentOptions selfconsist_options(Json const& point) {
    Json const& s = point.at("selfconsist");
    tree::SelfConsistentOptions o;
    o.blend_weight = get<double>(s, "blend_weight", "selfconsist");
    o.tolerance = get<double>(s, "tolerance", "selfconsist");
    o.max_iterations = get_int(s, "max_iterations", "selfconsist");
    o.min_working = get_u64(s, "min_working", "selfconsist");
    if (o.blend_weight <= 0 || o.blend_weight > 1) fail("selfconsist.blend_weight must lie in (0, 1]");
    return o;
}

void validate_config(Json const& config) {
    auto points = expand_points(config);
    for (auto const& point : points) {
        auto system = system_of(point);
        get_u64(point, "evolutions", "config");
        engine_params(point);
        try {
            with_system(point, [](auto const&) { return 0; });
        } catch (ConfigError const&) {
            throw;
        } catch (std::invalid_argument const& ex) {
            fail(std::string(system) + ": " + ex.what());
        }
        auto method = point["density"]["method"].get<std::string>();
        if (method != "auto" && method != "analytic" && method != "monte_carlo" && method != "enumeration" &&
            method != "none")
            fail("density.method must be auto, analytic, monte_carlo, enumeration or none");
        if (method == "analytic" && !has_analytic(system))
            fail(std::string(system) + " has no closed-form density");
        if (method == "enumeration") {
            if (!is_int_system(system)) fail(std::string(system) + " cannot be enumerated");
            auto size = space_size(vec::IntVectorSystem(int_vector_config(point)));
            if (!size || *size > kEnumerationLimit) fail("genome space too large to enumerate");
        }
        if (is_real_system(system) && point["params"]["termination"].is_null())
            fail(std::string(system) + " needs params.termination");
        if ((system == "gaussian" || system == "twisted_gaussian") && method != "monte_carlo") {
            double t = termination_of(point);
            if (!(t > 0 && t < 1)) fail("termination must lie in (0, 1)");
        }
        auto const& kd = point["kprime_delta"];
        if (!kd.is_null()) {
            if (!kd.is_number()) fail("kprime_delta must be a number");
            if (!point["params"].contains("n")) fail("kprime_delta needs a system with a dimension n");
            if (get_int(point["params"], "n", "params") + kd.get<double>() <= 1.0) fail("n + kprime_delta must exceed 1");
        }
        if (system == "parity_tree") selfconsist_options(point);
    }
}

ScalingRow run_point(Json const& point, PointOptions const& options) {
    auto system = system_of(point);
    ScalingRow row;
    row.system = std::string(system);
    for (auto const& name : param_columns(system)) {
        if (name == "population_size") {
            row.params[name] = static_cast<double>(get_u64(point["engine"], name, "engine"));
        } else if (name == "termination") {
            row.params[name] = termination_of(point);
        } else {
            auto const& v = point["params"].at(name);
            row.params[name] = v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : v.get<double>();
        }
    }

    auto evolutions = get_u64(point, "evolutions", "config");
    if (!options.dry_run && evolutions > 0) {
        auto ep = engine_params(point);
        auto seed = point_seed(point);
        with_system(point, [&](auto const& sys) {
            auto summary = run(sys, ep, evolutions, seed, options.jobs);
            row.evolutions = summary.evolutions;
            row.failures = summary.failures;
            row.median_generations = summary.median_generations;
            return 0;
        });
    }

    auto method = resolved_method(point);
    if (method != "none") {
        auto d = measure_density(point, method, options.jobs);
        row.density = d.density;
        row.density_method = std::string(method_name(d.method));
        if (d.method == DensityMethod::monte_carlo) row.density_stderr = d.std_error;
        auto const& kd = point["kprime_delta"];
        if (!kd.is_null()) {
            row.kprime_delta = kd.get<double>();
            if (get_int(point["params"], "n", "params") == 2) {
                row.density2 = d.density;
            } else {
                Json two = point;
                two["params"]["n"] = 2;
                row.density2 = measure_density(two, resolved_method(two), options.jobs).density;
            }
        }
    }
    row.derive_statistics();
    return row;
}

std::vector<std::string> param_columns(std::string_view system) {
    std::vector<std::string> cols;
    if (system == "sort_linear")
        cols = {"statement_set", "v", "program_length"};
    else if (system == "parity_tree")
        cols = {"statement_set", "n_bits", "termination", "subroutines"};
    else if (system == "highest")
        cols = {"n", "p"};
    else if (system == "binary" || system == "twisted_binary")
        cols = {"n", "b", "termination"};
    else
        cols = {"n", "termination"};
    cols.push_back("population_size");
    return cols;
}

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

std::string csv_header(std::vector<std::string> const& params) {
    std::string h = "system";
    for (auto const& p : params) h += "," + p;
    h += ",evolutions,median_G,D,D_method,D_stderr,K,Kprime_delta,Kprime";
    return h;
}

std::string csv_row(ScalingRow const& row, std::vector<std::string> const& params) {
    auto opt = [](std::optional<double> const& v) { return v ? format_number(*v) : std::string(); };
    std::string s = row.system;
    for (auto const& p : params) {
        auto it = row.params.find(p);
        s += "," + (it == row.params.end() ? std::string() : format_number(it->second));
    }
    s += "," + std::to_string(row.evolutions);
    s += "," + opt(row.median_generations);
    s += "," + opt(row.density);
    s += "," + row.density_method;
    s += "," + opt(row.density_stderr);
    s += "," + opt(row.k);
    s += "," + opt(row.kprime_delta);
    s += "," + opt(row.kprime);
    return s;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    std::istringstream in{std::string(text)};
    std::string line;
    auto split = [](std::string const& l) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ss(l);
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!l.empty() && l.back() == ',') out.emplace_back();
        return out;
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (t.metadata.empty()) t.metadata = line.substr(1);
            continue;
        }
        if (t.columns.empty()) {
            t.columns = split(line);
            if (t.columns.empty() || t.columns[0] != "system") throw std::invalid_argument("CSV header must start with 'system'");
            auto ev = std::find(t.columns.begin(), t.columns.end(), "evolutions");
            if (ev == t.columns.end()) throw std::invalid_argument("CSV header lacks 'evolutions'");
            t.param_names.assign(t.columns.begin() + 1, ev);
            continue;
        }
        auto cells = split(line);
        if (cells.size() != t.columns.size())
            throw std::invalid_argument("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(t.columns.size()));
        ScalingRow r;
        auto num = [](std::string const& c) -> std::optional<double> {
            if (c.empty()) return std::nullopt;
            return std::stod(c);
        };
        for (std::size_t i = 0; i < cells.size(); ++i) {
            auto const& col = t.columns[i];
            auto const& c = cells[i];
            if (col == "system")
                r.system = c;
            else if (col == "evolutions")
                r.evolutions = c.empty() ? 0 : std::stoull(c);
            else if (col == "median_G")
                r.median_generations = num(c);
            else if (col == "D")
                r.density = num(c);
            else if (col == "D_method")
                r.density_method = c;
            else if (col == "D_stderr")
                r.density_stderr = num(c);
            else if (col == "K")
                r.k = num(c);
            else if (col == "Kprime_delta")
                r.kprime_delta = num(c);
            else if (col == "Kprime")
                r.kprime = num(c);
            else if (auto v = num(c))
                r.params[col] = *v;
        }
        t.rows.push_back(std::move(r));
    }
    if (t.columns.empty()) throw std::invalid_argument("CSV has no header");
    return t;
}

namespace {

std::string metadata_line(Json const& config) { return "# evolve config_hash=" + config_hash(config); }

std::vector<ScalingRow> run_points(std::vector<Json> const& points, std::size_t skip, PointOptions const& options,
                                   std::ostream& out, Progress const& progress) {
    std::vector<ScalingRow> rows;
    if (points.empty()) return rows;
    auto cols = param_columns(system_of(points.front()));
    for (std::size_t i = skip; i < points.size(); ++i) {
        if (progress) progress("point " + std::to_string(i + 1) + "/" + std::to_string(points.size()) + ": " +
                               points[i]["params"].dump());
        auto row = run_point(points[i], options);
        out << csv_row(row, cols) << '\n';
        out.flush();
        if (progress) {
            std::string msg = "  G=" + (row.median_generations ? format_number(*row.median_generations) : "-") +
                              " failures=" + std::to_string(row.failures) +
                              " D=" + (row.density ? format_number(*row.density) : "-");
            progress(msg);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

std::vector<ScalingRow> run_experiment(Json const& config, PointOptions const& options, std::ostream& out,
                                       Progress const& progress) {
    validate_config(config);
    auto points = expand_points(config);
    out << metadata_line(config) << '\n' << csv_header(param_columns(system_of(points.front()))) << '\n';
    return run_points(points, 0, options, out, progress);
}

std::vector<ScalingRow> run_experiment(Json const& config, PointOptions const& options, std::string const& out_path,
                                       Progress const& progress) {
    validate_config(config);
    auto points = expand_points(config);
    auto meta = metadata_line(config);
    auto header = csv_header(param_columns(system_of(points.front())));

    std::size_t done = 0;
    if (std::filesystem::exists(out_path)) {
        std::ifstream in(out_path);
        if (!in) throw std::runtime_error("cannot read '" + out_path + "'");
        std::string first, second, line;
        std::getline(in, first);
        std::getline(in, second);
        if (first != meta || second != header)
            throw ConfigError("'" + out_path + "' was written for a different config; remove it or choose another --out");
        std::vector<std::string> complete;
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        // keep only newline-terminated rows
        std::size_t end = content.rfind('\n');
        content = end == std::string::npos ? std::string() : content.substr(0, end + 1);
        done = static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
        if (done > points.size()) throw ConfigError("'" + out_path + "' has more rows than the config has points");
        std::ofstream rewrite(out_path, std::ios::trunc);
        rewrite << meta << '\n' << header << '\n' << content;
        if (!rewrite) throw std::runtime_error("cannot write '" + out_path + "'");
        if (progress && done) progress("resuming after " + std::to_string(done) + " completed point(s)");
    } else {
        auto parent = std::filesystem::path(out_path).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        std::ofstream create(out_path);
        if (!create) throw std::runtime_error("cannot write '" + out_path + "'");
        create << meta << '\n' << header << '\n';
    }
    std::ofstream out(out_path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    return run_points(points, done, options, out, progress);
}

} // namespace evolab
