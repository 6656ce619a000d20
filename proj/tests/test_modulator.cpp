#include <stdexcept>
#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "qsim/modulator.hpp"

using namespace qsim;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("bessel_j boundary values") {
    CHECK(bessel_j(0, 0.0) == 1.0);
    for (int n = 1; n <= 8; ++n) CHECK(bessel_j(n, 0.0) == 0.0);
    // 50-term series cross-check at the first J0 root
    CHECK(std::fabs(bessel_j(0, 2.40482556)) < 1e-8);
}

TEST_CASE("bessel_j parity and recurrence") {
    for (int n = 1; n <= 10; ++n) {
        for (double beta : {0.5, 1.0, 2.0, 3.0}) {
            CHECK(bessel_j(-n, beta) == ((n % 2) ? -bessel_j(n, beta) : bessel_j(n, beta)));
            const double lhs = bessel_j(n - 1, beta) + bessel_j(n + 1, beta);
            CHECK(std::fabs(lhs - 2.0 * n / beta * bessel_j(n, beta)) < 1e-10);
        }
    }
}

TEST_CASE("bessel_j large-argument branch stays consistent with the series") {
    // straddle the series/recurrence switchover
    for (int n : {0, 1, 3, 7}) {
        CHECK(bessel_j(n, 11.99) == doctest::Approx(bessel_j(n, 12.01)).epsilon(2e-2));
    }
    // frozen references (independent evaluation)
    CHECK(bessel_j(0, 15.0) == doctest::Approx(-0.01422447282678077).epsilon(1e-9));
    CHECK(bessel_j(5, 20.0) == doctest::Approx(0.1511697680).epsilon(1e-7));
}

TEST_CASE("bessel_j domain errors") {
    CHECK_THROWS_AS(bessel_j(0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(bessel_j(1001, 1.0), std::invalid_argument);
}

TEST_CASE("truncation_order") {
    CHECK(truncation_order(0.0, 1e-9) == 0);
    CHECK(truncation_order(0.0, 1e-4) == 0);

    const int n_pi = truncation_order(kPi, 1e-9);
    CHECK(n_pi >= 4);
    double sum = bessel_j(0, kPi) * bessel_j(0, kPi);
    for (int n = 1; n <= n_pi; ++n) sum += 2.0 * bessel_j(n, kPi) * bessel_j(n, kPi);
    CHECK(sum >= 1.0 - 1e-9);

    CHECK(truncation_order(kPi / 3.0, 1e-6) >= 2);

    // monotone in beta and in 1/epsilon
    CHECK(truncation_order(1.0, 1e-9) <= truncation_order(2.0, 1e-9));
    CHECK(truncation_order(2.0, 1e-6) <= truncation_order(2.0, 1e-9));
    CHECK_THROWS_AS(truncation_order(1.0, 0.5), std::invalid_argument);
}

TEST_CASE("sideband ladder: identity, carrier-to-sideband ratio, carrier suppression") {
    ModulatorConfig off{0.0, 5e9, 1.3};
    const auto id = sideband_amplitudes(off, 0.0, 1e-9);
    CHECK(id.max_order == 0);
    CHECK(id.amplitude(0) == std::complex<double>(1.0, 0.0));

    ModulatorConfig third{kPi / 3.0, 5e9, 0.0};
    const auto l3 = sideband_amplitudes(third, 0.0, 1e-9);
    CHECK(l3.power(0) / l3.power(1) == doctest::Approx(2.7).epsilon(0.1 / 2.7));

    ModulatorConfig sup{3.0 * kPi / 4.0, 1.7e9, 0.0};
    const auto ls = sideband_amplitudes(sup, 0.0, 1e-9);
    CHECK(ls.power(0) <= 1e-3);
}

TEST_CASE("sideband ladder: unitarity over the full index range") {
    ModulatorConfig cfg{0.0, 5e9, 0.4};
    for (double beta = 0.0; beta <= kPi + 1e-12; beta += 0.01) {
        cfg.modulation_index = beta;
        const auto l = sideband_amplitudes(cfg, 0.0, 1e-9);
        CHECK(std::fabs(l.total_power() - 1.0) <= 1e-9);
    }
}

TEST_CASE("sideband ladder: Bessel parity at theta = 0") {
    ModulatorConfig cfg{1.7, 5e9, 0.0};
    const auto l = sideband_amplitudes(cfg, 0.0, 1e-9);
    for (int n = 1; n <= l.max_order; ++n) {
        const auto expected = std::conj(l.amplitude(n)) * ((n % 2) ? -1.0 : 1.0);
        CHECK(std::abs(l.amplitude(-n) - expected) < 1e-12);
    }
}

namespace {
// ladder extended well past the power-based cutoff so truncation tails sit
// far below the comparison tolerance
SidebandLadder deep_ladder(double beta, double theta) {
    SidebandLadder l;
    l.center_frequency_hz = 0.0;
    l.mode_spacing_hz = 5e9;
    l.max_order = truncation_order(beta, 1e-9) + 25;
    l.amplitudes.resize(static_cast<std::size_t>(2 * l.max_order + 1));
    const double phi = theta - kPi / 2.0;
    for (int n = -l.max_order; n <= l.max_order; ++n)
        l.amplitudes[static_cast<std::size_t>(n + l.max_order)] =
            std::polar(1.0, phi * n) * bessel_j(n, beta);
    return l;
}
}  // namespace

TEST_CASE("opposite-phase modulators compose to the identity") {
    for (double beta : {0.4, kPi / 3.0, 2.0}) {
        const auto composed = compose(deep_ladder(beta, 0.7), deep_ladder(beta, 0.7 + kPi));
        for (int n = -composed.max_order; n <= composed.max_order; ++n) {
            const std::complex<double> want = (n == 0) ? 1.0 : 0.0;
            CHECK(std::abs(composed.amplitude(n) - want) < 1e-10);
        }
    }
}

TEST_CASE("carrier null index") {
    const double null = carrier_null_index();
    CHECK(null == doctest::Approx(2.404826).epsilon(1e-6 / 2.404826));
    CHECK(std::fabs(bessel_j(0, null)) < 1e-8);
    const double j0_null = bessel_j(0, null);
    const double j0_op = bessel_j(0, 3.0 * kPi / 4.0);
    CHECK(j0_op * j0_op <= 1e-3);
    CHECK(j0_null * j0_null <= 1e-16);
}

TEST_CASE("spectrum trace: single line at beta = 0") {
    const auto ladder = identity_ladder(0.0, 5e9);
    std::vector<double> grid;
    for (double f = -5e9; f <= 5e9; f += 5e7) grid.push_back(f);
    const auto trace = spectrum_trace(ladder, 4e8, 1e8, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(trace.intensities[i] == doctest::Approx(lorentzian(grid[i], 5e8)).epsilon(1e-12));
    }
}

TEST_CASE("spectrum trace: coarse grid rejected") {
    const auto ladder = identity_ladder(0.0, 5e9);
    std::vector<double> grid{-1e9, 0.0, 1e9};  // far coarser than FWHM/5
    CHECK_THROWS_AS(spectrum_trace(ladder, 4e8, 1e8, grid), std::invalid_argument);
}

TEST_CASE("spectrum trace: peaks at drive harmonics with Bessel weights") {
    ModulatorConfig cfg{kPi / 2.0, 5e9, 0.0};
    const auto ladder = sideband_amplitudes(cfg, 0.0, 1e-9);
    const double fwhm = 5e8;
    std::vector<double> grid;
    for (double f = -4e10; f <= 4e10; f += fwhm / 10.0) grid.push_back(f);
    const auto trace = spectrum_trace(ladder, 4e8, 1e8, grid);

    // harmonics land on local maxima of the trace
    auto value_at = [&](double f) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (std::fabs(grid[i] - f) < std::fabs(grid[best] - f)) best = i;
        return trace.intensities[best];
    };
    const double j0 = bessel_j(0, kPi / 2.0), j1 = bessel_j(1, kPi / 2.0);
    CHECK(value_at(0.0) / value_at(5e9) ==
          doctest::Approx(j0 * j0 / (j1 * j1)).epsilon(0.01));
}

TEST_CASE("spectrum integral is invariant in beta") {
    ModulatorConfig cfg{0.0, 5e9, 0.0};
    const double ref = spectrum_integral(sideband_amplitudes(cfg, 0.0, 1e-12), 4e8, 1e8, 3e14);
    for (double beta : {0.5, kPi / 3.0, 2.0, kPi}) {
        cfg.modulation_index = beta;
        const double v = spectrum_integral(sideband_amplitudes(cfg, 0.0, 1e-12), 4e8, 1e8, 3e14);
        CHECK(std::fabs(v - ref) / ref <= 1e-9);
    }
}
