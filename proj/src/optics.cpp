#include "qsim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace qsim {

void HomConfig::validate() const {
    if (arm_delay_ps <= 0) throw std::invalid_argument("hom: arm_delay must be > 0");
    if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0)) throw std::invalid_argument("hom: mode_overlap must be in [0, 1]");
    if (!(coherence_time_s > 0.0)) throw std::invalid_argument("hom: coherence_time must be > 0");
}

void DetectorModel::validate() const {
    if (!(jitter_sigma_ps >= 0.0)) throw std::invalid_argument("detector: jitter_sigma must be >= 0");
    if (dead_time_ps < 0) throw std::invalid_argument("detector: dead_time must be >= 0");
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("detector: efficiency must be in [0, 1]");
    if (!(dark_rate_hz >= 0.0)) throw std::invalid_argument("detector: dark_rate must be >= 0");
}

double hom_p2_curve(double tau, const EmitterParams& params, double arm_delay_s,
                    double overlap, double coherence_time_s) {
    const double side = 0.25 * (g2_analytic(params, tau - arm_delay_s) +
                                g2_analytic(params, tau + arm_delay_s));
    const double interference = 1.0 - overlap * std::exp(-2.0 * std::fabs(tau) / coherence_time_s);
    return 0.5 * g2_analytic(params, tau) + side * interference;
}

namespace {

double hom_p2(double tau, const EmitterParams& params, const HomConfig& config, double overlap) {
    return hom_p2_curve(tau, params, static_cast<double>(config.arm_delay_ps) * 1e-12, overlap,
                        config.coherence_time_s);
}

}  // namespace

double hom_p2_parallel(double tau_seconds, const EmitterParams& params, const HomConfig& config) {
    config.validate();
    return hom_p2(tau_seconds, params, config, config.mode_overlap);
}

double hom_p2_orthogonal(double tau_seconds, const EmitterParams& params, const HomConfig& config) {
    config.validate();
    return hom_p2(tau_seconds, params, config, 0.0);
}

double hom_visibility(double tau_seconds, const EmitterParams& params, const HomConfig& config) {
    const double orth = hom_p2_orthogonal(tau_seconds, params, config);
    if (orth <= 0.0) throw std::domain_error("hom_visibility: orthogonal coincidence probability is zero");
    return (orth - hom_p2(tau_seconds, params, config, config.mode_overlap)) / orth;
}

TimeTagStream apply_detector(const TimeTagStream& stream, const DetectorModel& model, std::uint64_t seed) {
    stream.validate();
    model.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1.0);

    std::vector<std::int64_t> tags;
    tags.reserve(stream.timestamps.size());
    for (auto t : stream.timestamps) {
        if (uni(rng) >= model.efficiency) continue;
        double v = static_cast<double>(t);
        if (model.jitter_sigma_ps > 0.0) v += jitter(rng) * model.jitter_sigma_ps;
        const std::int64_t q = std::llround(v);
        if (q >= 0 && q <= stream.duration_ps) tags.push_back(q);
    }
    std::sort(tags.begin(), tags.end());

    if (model.dead_time_ps > 0) {
        std::vector<std::int64_t> kept;
        kept.reserve(tags.size());
        std::int64_t last = std::numeric_limits<std::int64_t>::min();
        for (auto t : tags) {
            if (last == std::numeric_limits<std::int64_t>::min() || t - last >= model.dead_time_ps) {
                kept.push_back(t);
                last = t;
            }
        }
        tags.swap(kept);
    }

    if (model.dark_rate_hz > 0.0 && stream.duration_ps > 0) {
        const double mean = model.dark_rate_hz * static_cast<double>(stream.duration_ps) * 1e-12;
        std::poisson_distribution<std::int64_t> pois(mean);
        const std::int64_t n_dark = pois(rng);
        std::uniform_int_distribution<std::int64_t> place(0, stream.duration_ps);
        for (std::int64_t i = 0; i < n_dark; ++i) tags.push_back(place(rng));
        std::sort(tags.begin(), tags.end());
    }

    TimeTagStream out;
    out.channel = stream.channel;
    out.duration_ps = stream.duration_ps;
    out.timestamps.reserve(tags.size());
    for (auto t : tags) {
        if (!out.timestamps.empty() && t <= out.timestamps.back()) t = out.timestamps.back() + 1;
        if (t > out.duration_ps) break;
        out.timestamps.push_back(t);
    }
    return out;
}

std::pair<TimeTagStream, TimeTagStream> split_stream(const TimeTagStream& stream, std::uint64_t seed) {
    stream.validate();
    std::mt19937_64 rng(seed);
    TimeTagStream a, b;
    a.channel = 0;
    b.channel = 1;
    a.duration_ps = b.duration_ps = stream.duration_ps;
    for (auto t : stream.timestamps) {
        if (rng() & 1u)
            a.timestamps.push_back(t);
        else
            b.timestamps.push_back(t);
    }
    return {std::move(a), std::move(b)};
}

CorrelationHistogram simulate_hom_clicks(const EmitterParams& params,
                                         const HomConfig& config,
                                         const DetectorModel& model,
                                         std::uint64_t target_pairs,
                                         std::uint64_t seed,
                                         std::int64_t bin_width_ps,
                                         const std::optional<SidebandLadder>& ladder) {
    params.validate();
    config.validate();
    model.validate();
    if (target_pairs == 0) throw std::invalid_argument("simulate_hom_clicks: target_pairs must be > 0");

    double overlap = (config.polarization == Polarization::parallel) ? config.mode_overlap : 0.0;
    if (ladder) overlap *= ladder->total_power();  // unitary ladder: self-overlap is 1 within truncation

    const double window_s = 3.0 * static_cast<double>(config.arm_delay_ps) * 1e-12;
    const std::int64_t window_ps = 3 * config.arm_delay_ps;

    // rejection envelope from a scan of the curve (Rabi overshoot can exceed 1)
    double peak = 0.0;
    for (int i = 0; i <= 4096; ++i) {
        const double tau = -window_s + 2.0 * window_s * i / 4096.0;
        peak = std::max(peak, hom_p2(tau, params, config, overlap));
    }
    if (peak <= 0.0) throw std::domain_error("simulate_hom_clicks: degenerate coincidence curve");
    const double envelope = 1.05 * peak;

    CorrelationHistogram h;
    h.bin_width_ps = bin_width_ps;
    h.window_ps = window_ps;
    h.counts.assign(static_cast<std::size_t>(2 * (window_ps / bin_width_ps) + 1), 0);
    h.tags_a = h.tags_b = target_pairs;
    h.duration_ps = 2 * window_ps;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1.0);
    const double pair_sigma_ps = model.jitter_sigma_ps * std::sqrt(2.0);
    const int K = h.half_bins();

    std::uint64_t accepted = 0;
    std::uint64_t attempts = 0;
    const std::uint64_t max_attempts = target_pairs * 10'000;
    while (accepted < target_pairs) {
        if (++attempts > max_attempts)
            throw std::domain_error("simulate_hom_clicks: rejection efficiency underflow");
        const double tau = (2.0 * uni(rng) - 1.0) * window_s;
        if (uni(rng) * envelope > hom_p2(tau, params, config, overlap)) continue;
        double tau_ps = tau * 1e12;
        if (pair_sigma_ps > 0.0) tau_ps += jitter(rng) * pair_sigma_ps;
        const auto d = static_cast<std::int64_t>(std::llround(tau_ps));
        const double idx = std::floor((static_cast<double>(d) + 0.5 * static_cast<double>(bin_width_ps)) /
                                      static_cast<double>(bin_width_ps));
        if (idx >= -K && idx <= K) ++h.counts[static_cast<std::size_t>(static_cast<int>(idx) + K)];
        ++accepted;
    }
    return h;
}

}  // namespace qsim
