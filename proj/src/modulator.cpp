#include "qsim/modulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qsim {

void ModulatorConfig::validate() const {
    if (!(modulation_index >= 0.0)) throw std::invalid_argument("modulator: modulation_index must be >= 0");
    if (!(drive_frequency_hz > 0.0)) throw std::invalid_argument("modulator: drive_frequency must be > 0");
}

double SidebandLadder::total_power() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
}

namespace {

double bessel_series(int n, double beta) {
    // J_n(x) = sum_k (-1)^k (x/2)^{n+2k} / (k! (n+k)!), n >= 0
    const double half = 0.5 * beta;
    double term = 1.0;
    for (int k = 1; k <= n; ++k) term *= half / k;  // (x/2)^n / n!
    double sum = term;
    const double h2 = half * half;
    for (int k = 1; k < 200; ++k) {
        term *= -h2 / (static_cast<double>(k) * (n + k));
        sum += term;
        if (std::fabs(term) < 1e-18 * (std::fabs(sum) + 1e-30)) break;
    }
    return sum;
}

double bessel_miller(int n, double beta) {
    // downward recurrence from well above max(n, beta), normalized with
    // J_0 + 2 sum J_{2k} = 1
    const int start = 2 * ((std::max(n, static_cast<int>(beta)) + static_cast<int>(2.0 * std::sqrt(beta)) + 40) / 2);
    double jp = 0.0, j = 1e-30, result = 0.0, norm = 0.0;
    for (int k = start; k >= 0; --k) {
        const double jm = 2.0 * (k + 1) / beta * j - jp;
        jp = j;
        j = jm;
        if (k % 2 == 0) norm += (k == 0) ? j : 2.0 * j;
        if (k == n) result = j;
        if (std::fabs(j) > 1e250) {  // rescale to avoid overflow
            jp /= 1e250;
            j /= 1e250;
            norm /= 1e250;
            result /= 1e250;
        }
    }
    return result / norm;
}

}  // namespace

double bessel_j(int order, double beta) {
    if (!(beta >= 0.0)) throw std::invalid_argument("bessel_j: beta must be >= 0");
    if (order < -1000 || order > 1000) throw std::invalid_argument("bessel_j: |order| must be <= 1000");
    const int n = std::abs(order);
    const double sign = (order < 0 && n % 2 == 1) ? -1.0 : 1.0;
    if (beta == 0.0) return n == 0 ? 1.0 : 0.0;
    const double v = (beta < 12.0) ? bessel_series(n, beta) : bessel_miller(n, beta);
    return sign * v;
}

int truncation_order(double beta, double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw std::invalid_argument("truncation_order: epsilon must be in (0, 1e-3]");
    const double j0 = bessel_j(0, beta);
    double sum = j0 * j0;
    int n = 0;
    while (sum < 1.0 - epsilon) {
        ++n;
        if (n > 1000) throw std::invalid_argument("truncation_order: order limit exceeded");
        const double jn = bessel_j(n, beta);
        sum += 2.0 * jn * jn;
    }
    return n;
}

SidebandLadder sideband_amplitudes(const ModulatorConfig& config,
                                   double center_frequency_hz,
                                   double epsilon) {
    config.validate();
    const int n_max = truncation_order(config.modulation_index, epsilon);
    SidebandLadder ladder;
    ladder.center_frequency_hz = center_frequency_hz;
    ladder.mode_spacing_hz = config.drive_frequency_hz;
    ladder.max_order = n_max;
    ladder.amplitudes.resize(static_cast<std::size_t>(2 * n_max + 1));
    const double phi = config.drive_phase - std::numbers::pi / 2.0;
    for (int n = -n_max; n <= n_max; ++n) {
        ladder.amplitudes[static_cast<std::size_t>(n + n_max)] =
            std::polar(1.0, phi * n) * bessel_j(n, config.modulation_index);
    }
    return ladder;
}

SidebandLadder identity_ladder(double center_frequency_hz, double mode_spacing_hz) {
    SidebandLadder ladder;
    ladder.center_frequency_hz = center_frequency_hz;
    ladder.mode_spacing_hz = mode_spacing_hz;
    ladder.max_order = 0;
    ladder.amplitudes = {1.0};
    return ladder;
}

SidebandLadder compose(const SidebandLadder& first, const SidebandLadder& second) {
    if (first.mode_spacing_hz != second.mode_spacing_hz)
        throw std::invalid_argument("compose: mode spacings differ");
    SidebandLadder out;
    out.center_frequency_hz = first.center_frequency_hz;
    out.mode_spacing_hz = first.mode_spacing_hz;
    out.max_order = first.max_order + second.max_order;
    out.amplitudes.assign(static_cast<std::size_t>(2 * out.max_order + 1), 0.0);
    for (int n = -first.max_order; n <= first.max_order; ++n) {
        for (int m = -second.max_order; m <= second.max_order; ++m) {
            out.amplitudes[static_cast<std::size_t>(n + m + out.max_order)] +=
                first.amplitude(n) * second.amplitude(m);
        }
    }
    return out;
}

double carrier_null_index() {
    double lo = 2.0, hi = 3.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (bessel_j(0, lo) * bessel_j(0, mid) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

double lorentzian(double x, double fwhm) {
    const double hw = 0.5 * fwhm;
    return hw / std::numbers::pi / (x * x + hw * hw);
}

SpectrumTrace spectrum_trace(const SidebandLadder& ladder,
                             double source_fwhm_hz,
                             double etalon_fwhm_hz,
                             std::span<const double> scan_offsets_hz) {
    if (!(source_fwhm_hz > 0.0) || !(etalon_fwhm_hz > 0.0))
        throw std::invalid_argument("spectrum_trace: linewidths must be > 0");
    const double fwhm = source_fwhm_hz + etalon_fwhm_hz;
    for (std::size_t i = 1; i < scan_offsets_hz.size(); ++i) {
        if (scan_offsets_hz[i] - scan_offsets_hz[i - 1] > fwhm / 5.0)
            throw std::invalid_argument("spectrum_trace: grid too coarse (need >= 5 points per FWHM)");
    }
    SpectrumTrace trace;
    trace.linewidth_hz = fwhm;
    trace.offsets_hz.assign(scan_offsets_hz.begin(), scan_offsets_hz.end());
    trace.intensities.reserve(trace.offsets_hz.size());
    for (double f : trace.offsets_hz) {
        double v = 0.0;
        for (int n = -ladder.max_order; n <= ladder.max_order; ++n)
            v += ladder.power(n) * lorentzian(f - n * ladder.mode_spacing_hz, fwhm);
        trace.intensities.push_back(v);
    }
    return trace;
}

double spectrum_integral(const SidebandLadder& ladder,
                         double source_fwhm_hz,
                         double etalon_fwhm_hz,
                         double half_span_hz) {
    const double hw = 0.5 * (source_fwhm_hz + etalon_fwhm_hz);
    double total = 0.0;
    for (int n = -ladder.max_order; n <= ladder.max_order; ++n) {
        const double c = n * ladder.mode_spacing_hz;
        total += ladder.power(n) / std::numbers::pi *
                 (std::atan((half_span_hz - c) / hw) + std::atan((half_span_hz + c) / hw));
    }
    return total;
}

}  // namespace qsim
