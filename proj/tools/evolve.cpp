#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evolab/analysis.hpp"
#include "evolab/errors.hpp"
#include "evolab/experiment.hpp"
#include "evolab/tree_gp.hpp"

using namespace evolab;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInsufficient = 3;

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::size_t jobs = 1;
    std::string out;
    bool to_stdout = false;
    bool quiet = false;
};

Json load(Common const& c) {
    Json config = load_config(c.config_path);
    for (auto const& s : c.sets) apply_override(config, s);
    return config;
}

Progress progress_for(Common const& c) {
    if (c.quiet) return {};
    return [](std::string const& msg) { std::cerr << msg << std::endl; };
}

int cmd_run(Common const& c, bool dry_run) {
    Json config = load(c);
    PointOptions opts{c.jobs, dry_run};
    if (c.to_stdout) {
        run_experiment(config, opts, std::cout, progress_for(c));
        return 0;
    }
    std::string out = c.out;
    if (out.empty() && config.contains("output") && config["output"].is_string()) out = config["output"];
    if (out.empty()) {
        run_experiment(config, opts, std::cout, progress_for(c));
        return 0;
    }
    run_experiment(config, opts, out, progress_for(c));
    if (!c.quiet) std::cerr << "wrote " << out << std::endl;
    return 0;
}

double n_of(ScalingRow const& r) {
    auto it = r.params.find("n");
    if (it == r.params.end()) throw ConfigError("row has no n column; K' needs a dimension");
    return it->second;
}

int cmd_analyze(std::string const& csv_path, std::optional<double> delta, std::string const& out_path, bool fit,
                bool quiet) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open '" + csv_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    auto table = parse_csv(ss.str());

    // Recover sqrt(D2) * G from the stored K' and rescale to the new delta.
    std::vector<std::optional<double>> density2(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        auto& r = table.rows[i];
        if (r.kprime && r.kprime_delta && r.median_generations && *r.median_generations > 0) {
            double n = n_of(r);
            double f = (n + *r.kprime_delta) * std::log(n + *r.kprime_delta);
            double root = *r.kprime * f / *r.median_generations;
            density2[i] = root * root;
        }
        r.density2 = density2[i];
        if (delta && r.density2) r.kprime_delta = *delta;
        r.derive_statistics();
    }

    std::ostringstream csv;
    if (!table.metadata.empty()) csv << '#' << table.metadata << '\n';
    csv << csv_header(table.param_names) << '\n';
    for (auto const& r : table.rows) csv << csv_row(r, table.param_names) << '\n';
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
        out << csv.str();
    }

    if (fit) {
        // Group rows by every parameter except n.
        std::map<std::string, std::vector<KPrimePoint>> groups;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            auto const& r = table.rows[i];
            if (!density2[i] || !r.median_generations) continue;
            std::string key = r.system;
            for (auto const& [k, v] : r.params)
                if (k != "n") key += "|" + k + "=" + format_number(v);
            groups[key].push_back({n_of(r), *r.median_generations, *density2[i]});
        }
        std::vector<std::vector<KPrimePoint>> list;
        for (auto& [_, g] : groups) list.push_back(std::move(g));
        auto result = fit_f2_delta(list);
        std::cerr << "fitted delta=" << format_number(result.delta) << " residual=" << format_number(result.residual)
                  << std::endl;
    } else if (!quiet) {
        std::cerr << table.rows.size() << " rows" << std::endl;
    }
    return 0;
}

int cmd_selfconsist(Common const& c) {
    Json config = load(c);
    validate_config(config);
    auto points = expand_points(config);
    if (system_of(points.front()) != "parity_tree") throw ConfigError("selfconsist needs a parity_tree config");
    if (points.size() != 1) throw ConfigError("selfconsist takes a single parameter point, not a sweep");
    auto const& point = points.front();
    auto result = tree::self_consistent_distribution(parity_config(point), engine_params(point),
                                                     point["evolutions"].get<std::size_t>(),
                                                     point["master_seed"].get<std::uint64_t>(),
                                                     selfconsist_options(point), c.jobs);
    Json out;
    out["length_weights"] = result.distribution.buckets;
    if (result.distribution.subroutines) out["subroutine_weights"] = *result.distribution.subroutines;
    out["distances"] = result.distances;
    out["converged"] = result.converged;
    std::string text = out.dump(2) + "\n";
    if (c.out.empty() || c.to_stdout) {
        std::cout << text;
    } else {
        std::ofstream f(c.out);
        if (!f) throw std::runtime_error("cannot write '" + c.out + "'");
        f << text;
    }
    return 0;
}

void add_common(CLI::App* sub, Common& c, bool with_out) {
    sub->add_option("config", c.config_path, "experiment file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", c.sets, "override, e.g. --set params.v=[2,3]");
    sub->add_option("--jobs,-j", c.jobs, "worker threads")->check(CLI::Range(1, 1024));
    if (with_out) {
        sub->add_option("--out,-o", c.out, "output path");
        sub->add_flag("--stdout", c.to_stdout, "write data to standard output");
    }
    sub->add_flag("--quiet,-q", c.quiet, "no progress on standard error");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"evolve: evolution and solution-density experiments"};
    app.require_subcommand(1);

    Common run_opts, dens_opts, sc_opts;
    bool dry_run = false;
    auto* run_cmd = app.add_subcommand("run", "run every point of an experiment and write CSV rows");
    add_common(run_cmd, run_opts, true);
    run_cmd->add_flag("--dry-run", dry_run, "densities only, no evolutions");

    auto* dens_cmd = app.add_subcommand("density", "densities only");
    add_common(dens_cmd, dens_opts, true);

    std::string csv_path, analyze_out;
    std::optional<double> delta;
    bool fit = false;
    bool analyze_quiet = false;
    auto* an_cmd = app.add_subcommand("analyze", "recompute K and K' from a results CSV");
    an_cmd->add_option("csv", csv_path, "results file")->required()->check(CLI::ExistingFile);
    an_cmd->add_option("--kprime-delta", delta, "offset delta for K'");
    an_cmd->add_option("--out,-o", analyze_out, "output path (default: standard output)");
    an_cmd->add_flag("--fit-delta", fit, "fit delta across n and report it on standard error");
    an_cmd->add_flag("--quiet,-q", analyze_quiet, "no summary on standard error");

    auto* sc_cmd = app.add_subcommand("selfconsist", "iterate a parity_tree length law to self-consistency");
    add_common(sc_cmd, sc_opts, true);

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*run_cmd) return cmd_run(run_opts, dry_run);
        if (*dens_cmd) return cmd_run(dens_opts, true);
        if (*an_cmd) return cmd_analyze(csv_path, delta, analyze_out, fit, analyze_quiet);
        if (*sc_cmd) return cmd_selfconsist(sc_opts);
    } catch (InsufficientDataError const& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitInsufficient;
    } catch (ZeroDensityError const& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitInsufficient;
    } catch (std::invalid_argument const& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitValidation;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitIo;
    }
    return 0;
}
