#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "qsim/correlator.hpp"
#include "qsim/emitter.hpp"
#include "qsim/modulator.hpp"

namespace qsim {

enum class Polarization { parallel, orthogonal };

// Unbalanced Mach-Zehnder HOM interferometer.
struct HomConfig {
    std::int64_t arm_delay_ps = 35'000;  // delta tau
    double mode_overlap = 1.0;           // v_c in [0, 1]
    double coherence_time_s = 1e-9;      // tau_c
    Polarization polarization = Polarization::parallel;

    void validate() const;
};

struct DetectorModel {
    double jitter_sigma_ps = 0.0;  // Gaussian timing spread
    std::int64_t dead_time_ps = 0;
    double efficiency = 1.0;
    double dark_rate_hz = 0.0;

    void validate() const;
};

// Normalized HOM coincidence probability, co-polarized inputs:
// P = g2(tau)/2 + [g2(tau - dt) + g2(tau + dt)]/4 * (1 - v_c e^{-2|tau|/tau_c})
double hom_p2_parallel(double tau_seconds, const EmitterParams& params, const HomConfig& config);

// Continuous-delay form shared by both polarizations (overlap = 0 gives the
// cross-polarized curve); used where the delay is a fit parameter.
double hom_p2_curve(double tau_seconds, const EmitterParams& params, double arm_delay_s,
                    double overlap, double coherence_time_s);

// Cross-polarized inputs: same without the interference factor.
double hom_p2_orthogonal(double tau_seconds, const EmitterParams& params, const HomConfig& config);

// V = (P_orth - P_par) / P_orth. Throws std::domain_error when P_orth = 0.
double hom_visibility(double tau_seconds, const EmitterParams& params, const HomConfig& config);

// Per tag: drop with probability 1 - efficiency, add Gaussian jitter,
// enforce dead time on the surviving sorted tags, superpose uniform dark
// counts. Deterministic per seed.
TimeTagStream apply_detector(const TimeTagStream& stream, const DetectorModel& model, std::uint64_t seed);

// 50:50 polarization-insensitive beam splitter: each tag routed to output
// A or B with probability 1/2; counts conserved.
std::pair<TimeTagStream, TimeTagStream> split_stream(const TimeTagStream& stream, std::uint64_t seed);

// Event-level HOM: rejection-samples detector-pair delays from the
// normalized P2 curve over +-3 * arm_delay, convolves with combined jitter
// sqrt(2) * jitter_sigma, and bins them. An attached sideband ladder scales
// the interference overlap by its self-overlap (unity within truncation).
CorrelationHistogram simulate_hom_clicks(const EmitterParams& params,
                                         const HomConfig& config,
                                         const DetectorModel& model,
                                         std::uint64_t target_pairs,
                                         std::uint64_t seed,
                                         std::int64_t bin_width_ps = 256,
                                         const std::optional<SidebandLadder>& ladder = std::nullopt);

}  // namespace qsim
