#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "evolab/analysis.hpp"
#include "evolab/engine.hpp"
#include "evolab/linear_gp.hpp"
#include "evolab/tree_gp.hpp"
#include "evolab/vector_systems.hpp"

namespace evolab {

using Json = nlohmann::ordered_json;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Experiment file layout:
//
//   {
//     "system": "highest",
//     "master_seed": 1,
//     "evolutions": 100,
//     "params": {"n": 2, "p": [50, 100, 200]},
//     "engine": {"mutation_prob": 0.01},
//     "density": {"method": "auto", "target_hits": 1000},
//     "kprime_delta": 0.6,
//     "points": [ {...}, ... ],
//     "output": "highest.csv"
//   }
//
// An array under "params" (other than list_sizes / length_weights) is a
// sweep; several arrays give their Cartesian product. "points", when
// present, is a list of partial configs merged onto the base one after
// another, each then expanded the same way.

Json load_config(std::string const& path);
Json parse_config(std::string_view text);
// "engine.population_size=40" style override; the value is read as JSON
// and taken as a string when that fails.
void apply_override(Json& config, std::string_view assignment);
// Structural checks of the whole file and of every expanded point.
void validate_config(Json const& config);

std::uint64_t fnv1a(std::string_view bytes);
std::string config_hash(Json const& config);

// One fully specified parameter point: system defaults filled in.
std::vector<Json> expand_points(Json const& config);

std::string_view system_of(Json const& point);
EvolutionParams engine_params(Json const& point);
linear::SortingConfig sorting_config(Json const& point);
tree::ParityConfig parity_config(Json const& point);
vec::RealVectorConfig real_vector_config(Json const& point);
vec::IntVectorConfig int_vector_config(Json const& point);
tree::SelfConsistentOptions selfconsist_options(Json const& point);

struct PointOptions {
    std::size_t jobs = 1;
    bool dry_run = false;  // densities only
};

ScalingRow run_point(Json const& point, PointOptions const& options);

// CSV columns for the parameters of a system.
std::vector<std::string> param_columns(std::string_view system);
std::string csv_header(std::vector<std::string> const& params);
std::string csv_row(ScalingRow const& row, std::vector<std::string> const& params);
std::string format_number(double value);

struct CsvTable {
    std::string metadata;  // the leading comment line, without '#'
    std::vector<std::string> columns;
    std::vector<ScalingRow> rows;
    std::vector<std::string> param_names;
};
CsvTable parse_csv(std::string_view text);

using Progress = std::function<void(std::string const&)>;

/// Runs every point of the config, appending rows to `out_path` as they
/// complete. An existing file written for the same config hash is resumed
/// after its last complete row. Returns the rows produced by this call.
std::vector<ScalingRow> run_experiment(Json const& config, PointOptions const& options, std::string const& out_path,
                                       Progress const& progress = {});
// Same, writing the complete CSV to a stream.
std::vector<ScalingRow> run_experiment(Json const& config, PointOptions const& options, std::ostream& out,
                                       Progress const& progress = {});

} // namespace evolab
