// Batch front end for the photon-statistics experiments.

#include <cstdint>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qsim/correlator.hpp"
#include "qsim/experiments.hpp"
#include "qsim/io.hpp"
#include "qsim/modulator.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

int cmd_run(const std::string& config_path) {
    const auto config = qsim::RunConfig::from_json_file(config_path);
    const auto summary = qsim::run_experiment(config);
    std::cout << summary.line() << '\n';
    return 0;
}

qsim::TimeTagStream load_single_channel(const std::string& path) {
    const bool csv = path.size() > 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    auto streams = csv ? qsim::read_timetag_csv(path) : qsim::read_timetag_binary(path);
    if (streams.empty()) {
        qsim::TimeTagStream empty;
        return empty;
    }
    if (streams.size() != 1)
        throw std::invalid_argument(path + ": expected a single channel, found " + std::to_string(streams.size()));
    return streams.front();
}

int cmd_correlate(const std::string& a_path, const std::string& b_path,
                  std::int64_t bin_ps, std::int64_t window_ps, const std::string& out_path) {
    auto a = load_single_channel(a_path);
    auto b = load_single_channel(b_path);
    const auto duration = std::max(a.duration_ps, b.duration_ps);
    a.duration_ps = b.duration_ps = duration;
    const auto hist = qsim::cross_correlate(a, b, bin_ps, window_ps);
    const auto g2 = qsim::normalize_to_g2(hist);
    if (out_path.empty()) {
        std::cout << "tau_ps,counts,g2\n";
        for (std::size_t k = 0; k < hist.counts.size(); ++k)
            std::cout << hist.bin_center_ps(static_cast<int>(k)) << ',' << hist.counts[k] << ',' << g2[k] << '\n';
    } else {
        qsim::write_histogram_csv(out_path, hist, g2);
    }
    return 0;
}

int cmd_bessel(double beta) {
    const int n_max = qsim::truncation_order(beta, 1e-9);
    std::cout << "n,j_n,j_n_squared\n";
    for (int n = -n_max; n <= n_max; ++n) {
        const double j = qsim::bessel_j(n, beta);
        std::cout << n << ',' << j << ',' << j * j << '\n';
    }
    return 0;
}

int cmd_spectrum(double beta, double drive_ghz, double source_mhz, double etalon_mhz,
                 const std::string& out_path) {
    qsim::ModulatorConfig mod;
    mod.modulation_index = beta;
    mod.drive_frequency_hz = drive_ghz * 1e9;
    const auto ladder = qsim::sideband_amplitudes(mod, 0.0, 1e-9);
    const double fwhm = (source_mhz + etalon_mhz) * 1e6;
    const double span = (ladder.max_order + 2) * ladder.mode_spacing_hz + 10.0 * fwhm;
    std::vector<double> grid;
    for (double f = -span; f <= span; f += fwhm / 8.0) grid.push_back(f);
    const auto trace = qsim::spectrum_trace(ladder, source_mhz * 1e6, etalon_mhz * 1e6, grid);
    if (out_path.empty()) {
        std::cout << "offset_hz,intensity\n";
        std::cout.precision(12);
        for (std::size_t i = 0; i < trace.offsets_hz.size(); ++i)
            std::cout << trace.offsets_hz[i] << ',' << trace.intensities[i] << '\n';
    } else {
        qsim::write_spectrum_csv(out_path, trace);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photon-statistics simulator: single-photon streams, phase-modulation sidebands, HBT/HOM correlations"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
    run->add_option("config", config_path, "JSON config file")->required();

    std::string tag_a, tag_b, out_path;
    std::int64_t bin_ps = 64, window_ps = 20'000;
    auto* corr = app.add_subcommand("correlate-file", "Cross-correlate two time-tag files");
    corr->add_option("a", tag_a, "time-tag file A (.ttag or .csv)")->required();
    corr->add_option("b", tag_b, "time-tag file B")->required();
    corr->add_option("--bin-ps", bin_ps, "bin width, ps");
    corr->add_option("--window-ps", window_ps, "correlation window, ps");
    corr->add_option("-o,--output", out_path, "histogram CSV path (default stdout)");

    double beta = 0.0;
    auto* bes = app.add_subcommand("bessel", "Sideband weights J_n(beta) for a modulation index");
    bes->add_option("--beta", beta, "modulation index")->required();

    double drive_ghz = 5.0, source_mhz = 500.0, etalon_mhz = 100.0;
    auto* spec = app.add_subcommand("spectrum", "Scanning-etalon trace of a modulated single-photon line");
    spec->add_option("--beta", beta, "modulation index")->required();
    spec->add_option("--drive-ghz", drive_ghz, "drive frequency, GHz");
    spec->add_option("--source-mhz", source_mhz, "source linewidth FWHM, MHz");
    spec->add_option("--etalon-mhz", etalon_mhz, "etalon linewidth FWHM, MHz");
    spec->add_option("-o,--output", out_path, "spectrum CSV path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path);
        if (corr->parsed()) return cmd_correlate(tag_a, tag_b, bin_ps, window_ps, out_path);
        if (bes->parsed()) return cmd_bessel(beta);
        if (spec->parsed()) return cmd_spectrum(beta, drive_ghz, source_mhz, etalon_mhz, out_path);
    } catch (const qsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const qsim::FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
