#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "qsim/emitter.hpp"
#include "qsim/modulator.hpp"
#include "qsim/optics.hpp"

namespace qsim {

struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(const std::string& f, const std::string& what)
        : std::runtime_error("config field '" + f + "': " + what), field(f) {}
};

// Batch run description, JSON-backed (versioned schema). Rates are given
// in the bench-friendly units of the config file (ordinary Hz, ps) and
// converted to angular rates internally.
struct RunConfig {
    int schema_version = 1;
    std::string experiment;  // hbt | lifetime | spectrum | hom | bessel-sweep
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = ".";

    EmitterParams emitter;
    ModulatorConfig modulator;
    DetectorModel detector;
    HomConfig hom;

    // hbt
    std::int64_t duration_ps = 3'000'000'000;
    std::int64_t bin_width_ps = 64;
    std::int64_t window_ps = 20'000;

    // hom
    std::uint64_t target_pairs = 1'000'000;
    std::int64_t hom_bin_width_ps = 256;
    bool hom_modulated = false;

    // spectrum / bessel-sweep
    double source_linewidth_hz = 5e8;
    double etalon_linewidth_hz = 1e8;
    double beta_max = 3.14159265358979;
    double beta_step = 0.1;

    // lifetime
    int lifetime_points = 200;
    std::int64_t lifetime_span_ps = 5'000;
    double lifetime_noise_fraction = 0.01;

    static RunConfig from_json_file(const std::filesystem::path& path);
    static RunConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
    void validate() const;  // throws ConfigError naming the offending field
};

struct RunSummary {
    std::map<std::string, double> values;
    std::string line() const;  // "g2_zero=0.039 lifetime_ps=745" style
};

// Executes the configured experiment end to end, writing artifacts (time
// tags, histogram/spectrum CSVs, fit JSONs, effective config) into
// output_dir. Deterministic per (config, seed).
RunSummary run_experiment(const RunConfig& config);

}  // namespace qsim
