#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qsim {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Resonantly driven two-level emitter. All rates are angular (rad/s);
// the Hz-quoted values of a datasheet are rate / 2pi.
struct EmitterParams {
    double rabi_frequency = 0.0;   // Omega_0, rad/s
    double decay_rate = 0.0;       // gamma_2 (population decay), rad/s
    double dephasing_rate = 0.0;   // gamma (total coherence decay), rad/s

    double mu_squared() const {
        const double d = 0.5 * (dephasing_rate - decay_rate);
        return rabi_frequency * rabi_frequency - d * d;
    }
    // Envelope rate of the g2 oscillation, (gamma + gamma_2) / 2.
    double envelope_rate() const { return 0.5 * (dephasing_rate + decay_rate); }
    double lifetime() const { return 1.0 / decay_rate; }  // seconds

    // Steady-state excited population under resonant drive.
    double steady_state_population() const;

    static double hz_to_angular(double hz) { return kTwoPi * hz; }
    static double angular_to_hz(double rate) { return rate / kTwoPi; }

    // Throws std::invalid_argument on out-of-domain rates.
    void validate() const;
};

// Channel-labeled sorted photon detection times, integer picoseconds.
struct TimeTagStream {
    int channel = 0;
    std::vector<std::int64_t> timestamps;  // strictly increasing, <= duration
    std::int64_t duration_ps = 0;

    double mean_rate_hz() const;  // counts per second
    void validate() const;        // throws std::invalid_argument
};

// Normalized second-order correlation at delay tau (seconds). Symmetric
// in tau, exactly 0 at tau = 0. Handles both signs of mu^2 (analytic
// continuation cos->cosh) and the mu^2 = 0 boundary.
double g2_analytic(const EmitterParams& params, double tau_seconds);

// Independent oracle: integrates the resonant optical Bloch equations
// (population decay gamma_2, coherence decay gamma) from the ground state
// with fixed-step RK4, step <= (1/200) min(1/gamma_2, 1/Omega_0), and
// returns rho_ee(tau)/rho_ee(inf) on the given sorted nonnegative grid.
// Throws std::domain_error when the step count would overflow the budget.
std::vector<double> oracle_bloch_g2(const EmitterParams& params,
                                    std::span<const double> tau_grid_seconds);

// Quantum-jump emission-time sampler. Each radiative jump resets the
// system to the ground state, so the emission record is a renewal
// process; waiting times are drawn from the norm decay of the no-jump
// evolution (precomputed once per parameter set). Deterministic per seed.
// segments > 1 splits the duration into independently seeded segments,
// each restarted from the ground state (one correlation window of bias at
// each boundary).
TimeTagStream sample_emissions(const EmitterParams& params,
                               std::int64_t duration_ps,
                               std::uint64_t seed,
                               int segments = 1);

}  // namespace qsim
