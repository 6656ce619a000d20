#include "qsim/experiments.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "qsim/correlator.hpp"
#include "qsim/fitting.hpp"
#include "qsim/io.hpp"

namespace qsim {

namespace {

using nlohmann::json;

double require_number(const json& section, const std::string& prefix, const std::string& key) {
    if (!section.contains(key) || !section[key].is_number())
        throw ConfigError(prefix + "." + key, "missing or not a number");
    return section[key].get<double>();
}

double number_or(const json& section, const std::string& key, double fallback) {
    if (!section.contains(key)) return fallback;
    if (!section[key].is_number()) throw ConfigError(key, "not a number");
    return section[key].get<double>();
}

EmitterParams parse_emitter(const json& j) {
    if (!j.contains("emitter")) throw ConfigError("emitter", "section required for this experiment");
    const auto& e = j["emitter"];
    EmitterParams p;
    p.rabi_frequency = EmitterParams::hz_to_angular(require_number(e, "emitter", "rabi_hz"));
    p.decay_rate = 1.0 / (require_number(e, "emitter", "lifetime_ps") * 1e-12);
    p.dephasing_rate = EmitterParams::hz_to_angular(number_or(e, "dephasing_hz", 0.0));
    return p;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("JSON parse failure: ") + e.what());
    }

    RunConfig c;
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw ConfigError("schema_version", "must be 1");
    if (!j.contains("experiment") || !j["experiment"].is_string())
        throw ConfigError("experiment", "missing");
    c.experiment = j["experiment"].get<std::string>();

    const bool stochastic = c.experiment == "hbt" || c.experiment == "hom" || c.experiment == "lifetime";
    if (stochastic) {
        if (!j.contains("seed")) throw ConfigError("seed", "required for stochastic experiments");
        c.seed = j["seed"].get<std::uint64_t>();
    } else if (j.contains("seed")) {
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();

    if (c.experiment == "hbt" || c.experiment == "hom" || c.experiment == "lifetime")
        c.emitter = parse_emitter(j);
    else if (j.contains("emitter"))
        c.emitter = parse_emitter(j);

    const bool needs_modulator = c.experiment == "spectrum" || c.experiment == "bessel-sweep";
    if (needs_modulator || j.contains("modulator")) {
        if (!j.contains("modulator")) throw ConfigError("modulator", "section required for this experiment");
        const auto& m = j["modulator"];
        c.modulator.modulation_index = require_number(m, "modulator", "modulation_index");
        c.modulator.drive_frequency_hz = require_number(m, "modulator", "drive_frequency_ghz") * 1e9;
        c.modulator.drive_phase = number_or(m, "drive_phase", 0.0);
    }

    if (j.contains("detector")) {
        const auto& d = j["detector"];
        c.detector.jitter_sigma_ps = number_or(d, "jitter_sigma_ps", 0.0);
        c.detector.dead_time_ps = static_cast<std::int64_t>(number_or(d, "dead_time_ps", 0.0));
        c.detector.efficiency = number_or(d, "efficiency", 1.0);
        c.detector.dark_rate_hz = number_or(d, "dark_rate_hz", 0.0);
    }

    if (c.experiment == "hom" || j.contains("hom")) {
        if (!j.contains("hom")) throw ConfigError("hom", "section required for this experiment");
        const auto& h = j["hom"];
        c.hom.arm_delay_ps = static_cast<std::int64_t>(require_number(h, "hom", "arm_delay_ps"));
        c.hom.mode_overlap = number_or(h, "mode_overlap", 1.0);
        c.hom.coherence_time_s = number_or(h, "coherence_time_ps", 1000.0) * 1e-12;
        c.target_pairs = static_cast<std::uint64_t>(number_or(h, "target_pairs", 1e6));
        c.hom_bin_width_ps = static_cast<std::int64_t>(number_or(h, "bin_width_ps", 256.0));
        if (h.contains("modulated")) c.hom_modulated = h["modulated"].get<bool>();
        if (c.hom_modulated && !j.contains("modulator"))
            throw ConfigError("modulator", "section required when hom.modulated is true");
    }

    if (j.contains("hbt")) {
        const auto& h = j["hbt"];
        c.duration_ps = static_cast<std::int64_t>(number_or(h, "duration_ps", 3e9));
        c.bin_width_ps = static_cast<std::int64_t>(number_or(h, "bin_width_ps", 64.0));
        c.window_ps = static_cast<std::int64_t>(number_or(h, "window_ps", 20'000.0));
    }

    if (j.contains("spectrum")) {
        const auto& s = j["spectrum"];
        c.source_linewidth_hz = number_or(s, "source_linewidth_mhz", 500.0) * 1e6;
        c.etalon_linewidth_hz = number_or(s, "etalon_linewidth_mhz", 100.0) * 1e6;
    }

    if (j.contains("bessel_sweep")) {
        const auto& b = j["bessel_sweep"];
        c.beta_max = number_or(b, "beta_max", c.beta_max);
        c.beta_step = number_or(b, "beta_step", c.beta_step);
    }

    if (j.contains("lifetime")) {
        const auto& l = j["lifetime"];
        c.lifetime_points = static_cast<int>(number_or(l, "points", 200.0));
        c.lifetime_span_ps = static_cast<std::int64_t>(number_or(l, "span_ps", 5000.0));
        c.lifetime_noise_fraction = number_or(l, "noise_fraction", 0.01);
    }

    c.validate();
    return c;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string RunConfig::to_json_text() const {
    json j;
    j["schema_version"] = schema_version;
    j["experiment"] = experiment;
    j["seed"] = seed;
    j["output_dir"] = output_dir.string();
    j["emitter"] = {{"rabi_hz", EmitterParams::angular_to_hz(emitter.rabi_frequency)},
                    {"lifetime_ps", emitter.decay_rate > 0 ? 1e12 / emitter.decay_rate : 0.0},
                    {"dephasing_hz", EmitterParams::angular_to_hz(emitter.dephasing_rate)}};
    if (modulator.drive_frequency_hz > 0.0) {
        j["modulator"] = {{"modulation_index", modulator.modulation_index},
                          {"drive_frequency_ghz", modulator.drive_frequency_hz / 1e9},
                          {"drive_phase", modulator.drive_phase}};
    }
    j["detector"] = {{"jitter_sigma_ps", detector.jitter_sigma_ps},
                     {"dead_time_ps", detector.dead_time_ps},
                     {"efficiency", detector.efficiency},
                     {"dark_rate_hz", detector.dark_rate_hz}};
    j["hom"] = {{"arm_delay_ps", hom.arm_delay_ps},
                {"mode_overlap", hom.mode_overlap},
                {"coherence_time_ps", hom.coherence_time_s * 1e12},
                {"target_pairs", target_pairs},
                {"bin_width_ps", hom_bin_width_ps},
                {"modulated", hom_modulated}};
    j["hbt"] = {{"duration_ps", duration_ps}, {"bin_width_ps", bin_width_ps}, {"window_ps", window_ps}};
    j["spectrum"] = {{"source_linewidth_mhz", source_linewidth_hz / 1e6},
                     {"etalon_linewidth_mhz", etalon_linewidth_hz / 1e6}};
    j["bessel_sweep"] = {{"beta_max", beta_max}, {"beta_step", beta_step}};
    j["lifetime"] = {{"points", lifetime_points},
                     {"span_ps", lifetime_span_ps},
                     {"noise_fraction", lifetime_noise_fraction}};
    return j.dump(2);
}

void RunConfig::validate() const {
    static const char* kExperiments[] = {"hbt", "lifetime", "spectrum", "hom", "bessel-sweep"};
    bool known = false;
    for (const char* e : kExperiments)
        if (experiment == e) known = true;
    if (!known) throw ConfigError("experiment", "unknown experiment '" + experiment + "'");

    try {
        if (experiment == "hbt" || experiment == "hom" || experiment == "lifetime") emitter.validate();
        if (experiment == "spectrum" || experiment == "bessel-sweep") modulator.validate();
        if (experiment == "hom") hom.validate();
        detector.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("(module parameters)", e.what());
    }
    if (experiment == "hbt" && duration_ps <= 0) throw ConfigError("hbt.duration_ps", "must be > 0");
    if (experiment == "hom" && target_pairs == 0) throw ConfigError("hom.target_pairs", "must be > 0");
    if (experiment == "bessel-sweep" && !(beta_step > 0.0)) throw ConfigError("bessel_sweep.beta_step", "must be > 0");
    if (experiment == "lifetime" && lifetime_points < 4) throw ConfigError("lifetime.points", "must be >= 4");
}

std::string RunSummary::line() const {
    std::ostringstream out;
    out.precision(6);
    bool first = true;
    for (const auto& [k, v] : values) {
        if (!first) out << ' ';
        out << k << '=' << v;
        first = false;
    }
    return out.str();
}

namespace {

RunSummary run_hbt(const RunConfig& c) {
    const auto stream = sample_emissions(c.emitter, c.duration_ps, c.seed);
    auto [arm_a, arm_b] = split_stream(stream, c.seed ^ 0x5b5b5b5bULL);
    arm_a = apply_detector(arm_a, c.detector, c.seed ^ 0xa1ULL);
    arm_b = apply_detector(arm_b, c.detector, c.seed ^ 0xb2ULL);

    const auto hist = cross_correlate(arm_a, arm_b, c.bin_width_ps, c.window_ps);
    const auto g2 = normalize_to_g2(hist);

    write_timetag_binary(c.output_dir / "timetags.ttag", {arm_a, arm_b});
    write_histogram_csv(c.output_dir / "hbt_histogram.csv", hist, g2);

    // fit the correlation curve with the jitter-convolved model
    FitProblem prob;
    prob.model = make_g2_model();
    for (std::size_t k = 0; k < g2.size(); ++k) {
        prob.x.push_back(static_cast<double>(hist.bin_center_ps(static_cast<int>(k))) * 1e-12);
        prob.y.push_back(g2[k]);
        prob.sigma.push_back(std::sqrt(std::max<double>(static_cast<double>(hist.counts[k]), 1.0)) /
                             std::max(static_cast<double>(hist.counts[k]), 1.0) * std::max(g2[k], 1e-3));
    }
    prob.initial = {c.emitter.rabi_frequency, c.emitter.decay_rate, c.emitter.dephasing_rate,
                    1.0, 0.0, std::max(c.detector.jitter_sigma_ps, 1.0)};
    prob.lower = {0.0, 1e6, 0.0, 0.1, -0.5, 0.0};
    prob.upper = {1e13, 1e13, 1e13, 10.0, 0.5, 1e4};
    const auto fit = least_squares(prob);
    static const std::string names[] = {"rabi_rad_s", "decay_rad_s", "dephasing_rad_s",
                                        "amplitude", "baseline", "jitter_sigma_ps"};
    write_text_atomic(c.output_dir / "g2_fit.json", fit_result_to_json(fit, names));

    RunSummary s;
    s.values["g2_zero"] = g2[static_cast<std::size_t>(hist.half_bins())];
    s.values["lifetime_ps"] = 1e12 / fit.parameters[1];
    s.values["photons"] = static_cast<double>(stream.timestamps.size());
    return s;
}

RunSummary run_lifetime(const RunConfig& c) {
    const double t1_ps = 1e12 / c.emitter.decay_rate;
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<double> x, y;
    const double step = static_cast<double>(c.lifetime_span_ps) / (c.lifetime_points - 1);
    for (int i = 0; i < c.lifetime_points; ++i) {
        const double t = i * step;
        const double clean = std::exp(-t / t1_ps) + 0.01;  // offset floor
        x.push_back(t);
        y.push_back(clean * (1.0 + c.lifetime_noise_fraction * noise(rng)));
    }

    std::ostringstream csv;
    csv << "time_ps,counts\n";
    csv.precision(12);
    for (std::size_t i = 0; i < x.size(); ++i) csv << x[i] << ',' << y[i] << '\n';
    write_text_atomic(c.output_dir / "lifetime_decay.csv", csv.str());

    FitProblem prob;
    prob.model = make_exp_offset_model();
    prob.x = x;
    prob.y = y;
    prob.initial = {0.8, 0.7 * t1_ps, 0.0};
    prob.lower = {0.0, 1.0, -1.0};
    prob.upper = {10.0, 1e6, 1.0};
    const auto fit = least_squares(prob);
    static const std::string names[] = {"amplitude", "lifetime_ps", "offset"};
    write_text_atomic(c.output_dir / "lifetime_fit.json", fit_result_to_json(fit, names));

    RunSummary s;
    s.values["lifetime_ps"] = fit.parameters[1];
    s.values["lifetime_true_ps"] = t1_ps;
    return s;
}

std::vector<double> spectrum_grid(const SidebandLadder& ladder, double fwhm) {
    const double span = (ladder.max_order + 2) * ladder.mode_spacing_hz + 10.0 * fwhm;
    const double step = fwhm / 8.0;
    std::vector<double> grid;
    for (double f = -span; f <= span; f += step) grid.push_back(f);
    return grid;
}

FitResult fit_comb(const SidebandLadder& ladder, const SpectrumTrace& trace, int n_max, double fwhm) {
    FitProblem prob;
    prob.model = make_lorentzian_comb_model(n_max, ladder.mode_spacing_hz);
    prob.x = trace.offsets_hz;
    prob.y = trace.intensities;
    for (int n = 0; n <= n_max; ++n)
        prob.initial.push_back(std::max(0.5 * (ladder.power(std::min(n, ladder.max_order)) +
                                               ladder.power(-std::min(n, ladder.max_order))),
                                        1e-6));
    prob.initial.push_back(fwhm * 1.1);
    for (int n = 0; n <= n_max; ++n) {
        prob.lower.push_back(0.0);
        prob.upper.push_back(2.0);
    }
    prob.lower.push_back(fwhm * 0.01);
    prob.upper.push_back(fwhm * 100.0);
    return least_squares(prob);
}

RunSummary run_spectrum(const RunConfig& c) {
    const auto ladder = sideband_amplitudes(c.modulator, 0.0, 1e-9);
    const double fwhm = c.source_linewidth_hz + c.etalon_linewidth_hz;
    const auto grid = spectrum_grid(ladder, fwhm);
    const auto trace = spectrum_trace(ladder, c.source_linewidth_hz, c.etalon_linewidth_hz, grid);
    write_spectrum_csv(c.output_dir / "spectrum.csv", trace);

    const int n_max = std::max(ladder.max_order, 2);
    const auto fit = fit_comb(ladder, trace, n_max, fwhm);
    std::vector<std::string> names;
    for (int n = 0; n <= n_max; ++n) names.push_back("w" + std::to_string(n));
    names.push_back("fwhm_hz");
    write_text_atomic(c.output_dir / "spectrum_fit.json", fit_result_to_json(fit, names));

    RunSummary s;
    s.values["carrier_fraction"] = ladder.power(0);
    if (fit.parameters.size() > 1 && fit.parameters[1] > 0.0)
        s.values["carrier_to_first"] = fit.parameters[0] / fit.parameters[1];
    return s;
}

RunSummary run_hom(const RunConfig& c) {
    std::optional<SidebandLadder> ladder;
    if (c.hom_modulated) ladder = sideband_amplitudes(c.modulator, 0.0, 1e-9);

    HomConfig par = c.hom;
    par.polarization = Polarization::parallel;
    HomConfig orth = c.hom;
    orth.polarization = Polarization::orthogonal;

    const auto hist_par = simulate_hom_clicks(c.emitter, par, c.detector, c.target_pairs,
                                              c.seed ^ 0x11ULL, c.hom_bin_width_ps, ladder);
    const auto hist_orth = simulate_hom_clicks(c.emitter, orth, c.detector, c.target_pairs,
                                               c.seed ^ 0x22ULL, c.hom_bin_width_ps, ladder);

    const std::int64_t plateau_from = 2 * c.hom.arm_delay_ps;
    const auto norm_par = normalize_by_plateau(hist_par, plateau_from);
    const auto norm_orth = normalize_by_plateau(hist_orth, plateau_from);
    write_histogram_csv(c.output_dir / "hom_parallel.csv", hist_par, norm_par);
    write_histogram_csv(c.output_dir / "hom_orthogonal.csv", hist_orth, norm_orth);

    HomPairData data;
    for (std::size_t k = 0; k < norm_par.size(); ++k) {
        data.tau_seconds.push_back(static_cast<double>(hist_par.bin_center_ps(static_cast<int>(k))) * 1e-12);
        data.parallel.push_back(norm_par[k]);
        data.orthogonal.push_back(norm_orth[k]);
        data.sigma_parallel.push_back(std::sqrt(std::max<double>(static_cast<double>(hist_par.counts[k]), 1.0)) /
                                      std::max(1.0, static_cast<double>(hist_par.counts[k])) *
                                      std::max(norm_par[k], 1e-2));
        data.sigma_orthogonal.push_back(std::sqrt(std::max<double>(static_cast<double>(hist_orth.counts[k]), 1.0)) /
                                        std::max(1.0, static_cast<double>(hist_orth.counts[k])) *
                                        std::max(norm_orth[k], 1e-2));
    }
    const auto fit = fit_hom_pair(data, c.emitter, c.hom, c.detector.jitter_sigma_ps);
    static const std::string names[] = {"rabi_rad_s", "decay_rad_s", "dephasing_rad_s",
                                        "arm_delay_ps", "jitter_sigma_ps", "mode_overlap", "coherence_time_ps"};
    write_text_atomic(c.output_dir / "hom_fit.json", fit_result_to_json(fit.result, names));

    RunSummary s;
    const auto center = static_cast<std::size_t>(hist_par.half_bins());
    s.values["p_parallel_zero"] = norm_par[center];
    s.values["p_orthogonal_zero"] = norm_orth[center];
    s.values["visibility"] = fit.visibility_at_zero;
    return s;
}

RunSummary run_bessel_sweep(const RunConfig& c) {
    std::ostringstream csv;
    csv << "beta,w0,w1,w2\n";
    csv.precision(12);
    double max_dev = 0.0;
    for (double beta = 0.0; beta <= c.beta_max + 1e-12; beta += c.beta_step) {
        ModulatorConfig mod = c.modulator;
        mod.modulation_index = beta;
        const auto ladder = sideband_amplitudes(mod, 0.0, 1e-9);
        const double fwhm = c.source_linewidth_hz + c.etalon_linewidth_hz;
        const auto grid = spectrum_grid(ladder, fwhm);
        const auto trace = spectrum_trace(ladder, c.source_linewidth_hz, c.etalon_linewidth_hz, grid);
        const int n_max = std::max(ladder.max_order, 2);
        const auto fit = fit_comb(ladder, trace, n_max, fwhm);
        csv << beta << ',' << fit.parameters[0] << ',' << fit.parameters[1] << ',' << fit.parameters[2] << '\n';
        for (int n = 0; n <= 2; ++n) {
            const double jn = bessel_j(n, beta);
            max_dev = std::max(max_dev, std::fabs(fit.parameters[static_cast<std::size_t>(n)] - jn * jn));
        }
    }
    write_text_atomic(c.output_dir / "bessel_sweep.csv", csv.str());

    RunSummary s;
    s.values["max_bessel_deviation"] = max_dev;
    return s;
}

}  // namespace

RunSummary run_experiment(const RunConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.output_dir);
    write_text_atomic(config.output_dir / "effective_config.json", config.to_json_text());

    if (config.experiment == "hbt") return run_hbt(config);
    if (config.experiment == "lifetime") return run_lifetime(config);
    if (config.experiment == "spectrum") return run_spectrum(config);
    if (config.experiment == "hom") return run_hom(config);
    if (config.experiment == "bessel-sweep") return run_bessel_sweep(config);
    throw ConfigError("experiment", "unknown experiment");
}

}  // namespace qsim
