#pragma once

// Run configuration shared by the CLI and the experiment driver.
//
// Plain-text format: one `key = value` per line, `#` starts a comment, lists
// are comma separated. A JSON manifest written by a previous run is accepted
// too, so every run can be repeated from its manifest.

#include <plap/conductivity.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace plap {

struct RunConfig {
    // discretization
    int mesh_n = 128;
    int cells = 240;
    int rings = 0; // 0: chosen from cells
    int j_max = 8;
    std::uint64_t mesh_seed = 7; // perturbed data mesh
    bool perturb_data_mesh = true;

    // single-run settings
    double p = 2.0;
    double tau = 0.0;
    std::string current = "cos1";
    std::string sample = "A";
    Parametrization param = Parametrization::log_conductivity;

    // sweeps
    std::string study = "linerr"; // linerr, invert or both
    std::vector<double> p_grid;   // default: 16 points on [1.5, 3]
    std::vector<double> tau_grid{0.0, 0.1};
    std::vector<std::string> samples{"A", "B", "C", "D"};
    std::vector<Parametrization> params{kAllParametrizations, kAllParametrizations + 4};
    double lambda = 0.0; // 0: the sample's own noise level
    double penalty = 1.0;
    bool misspecified = false; // also reconstruct with p = 2 operators
    std::size_t members = 100;
    std::size_t snapshots = 3;
    double max_skip_fraction = 0.01;

    // property suite
    std::size_t proptest_samples = 100000;
    double proptest_p_min = 1.2;
    double proptest_p_max = 4.0;

    std::uint64_t seed = 20240601;
    std::uint64_t noise_seed = 977;
    unsigned threads = 1;
    std::string out = "out";
};

std::vector<double> default_p_grid();

/// Applies one `key = value` setting; throws ConfigError naming the field.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Parses the key = value format. Errors carry "<source>:<line>: field '<key>'".
RunConfig parse_config(std::istream& is, const std::string& source = "<config>");
/// Reads a key = value file or a JSON manifest (detected by a leading '{').
RunConfig load_config(const std::string& path);

/// Every field, as JSON; read back by load_config / config_from_json.
std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text);

/// Rejects inconsistent settings (grid ranges, sample names, sizes).
void validate(const RunConfig& config);

} // namespace plap
