#pragma once

#include <complex>
#include <span>
#include <vector>

namespace qsim {

// Sinusoidally driven phase modulator.
struct ModulatorConfig {
    double modulation_index = 0.0;  // beta, dimensionless, >= 0
    double drive_frequency_hz = 0.0;  // Omega / 2pi
    double drive_phase = 0.0;         // theta, radians

    void validate() const;
};

// Complex amplitudes on the frequency modes omega_0 + n * Omega,
// n in [-max_order, max_order].
struct SidebandLadder {
    double center_frequency_hz = 0.0;
    double mode_spacing_hz = 0.0;
    int max_order = 0;
    std::vector<std::complex<double>> amplitudes;  // size 2*max_order + 1

    std::complex<double> amplitude(int n) const { return amplitudes[static_cast<std::size_t>(n + max_order)]; }
    double power(int n) const { return std::norm(amplitude(n)); }
    double total_power() const;
};

// Etalon-style intensity trace over a frequency-offset grid.
struct SpectrumTrace {
    std::vector<double> offsets_hz;   // relative to the carrier
    std::vector<double> intensities;  // >= 0, unit total area over all of R
    double linewidth_hz = 0.0;        // combined Lorentzian FWHM
};

// Bessel function of the first kind, |n| <= 1000, beta >= 0.
// Ascending power series below beta = 12, downward (Miller) recurrence with
// normalization above. J_{-n} = (-1)^n J_n.
double bessel_j(int order, double beta);

// Smallest N with sum_{|n|<=N} J_n(beta)^2 >= 1 - epsilon.
int truncation_order(double beta, double epsilon);

// a_n = J_n(beta) exp(i (theta - pi/2) n), truncated at truncation_order.
SidebandLadder sideband_amplitudes(const ModulatorConfig& config,
                                   double center_frequency_hz,
                                   double epsilon = 1e-9);

// Ladder for the unmodulated field: single unit-amplitude carrier mode.
SidebandLadder identity_ladder(double center_frequency_hz, double mode_spacing_hz);

// Discrete convolution of two ladders (two modulators in series, equal
// drive frequency).
SidebandLadder compose(const SidebandLadder& first, const SidebandLadder& second);

// First positive zero of J_0, bisected to 1e-9 (~2.404826).
double carrier_null_index();

// Sum of unit-area Lorentzians at offsets n * Omega weighted by |a_n|^2.
// Lorentzian convolution adds FWHMs, so every line carries
// source_fwhm + etalon_fwhm. Throws std::invalid_argument when the grid
// resolves the linewidth with fewer than 5 points per FWHM.
SpectrumTrace spectrum_trace(const SidebandLadder& ladder,
                             double source_fwhm_hz,
                             double etalon_fwhm_hz,
                             std::span<const double> scan_offsets_hz);

// Exact integral of the trace's Lorentzian-comb model over
// [-half_span, half_span] (antiderivative, not grid quadrature).
double spectrum_integral(const SidebandLadder& ladder,
                         double source_fwhm_hz,
                         double etalon_fwhm_hz,
                         double half_span_hz);

// Unit-area Lorentzian of the given FWHM.
double lorentzian(double x, double fwhm);

}  // namespace qsim
