#include "qsim/emitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace qsim {

void EmitterParams::validate() const {
    if (!(rabi_frequency >= 0.0) || !std::isfinite(rabi_frequency))
        throw std::invalid_argument("emitter: rabi_frequency must be >= 0");
    if (!(decay_rate > 0.0) || !std::isfinite(decay_rate))
        throw std::invalid_argument("emitter: decay_rate must be > 0");
    if (!(dephasing_rate >= 0.0) || !std::isfinite(dephasing_rate))
        throw std::invalid_argument("emitter: dephasing_rate must be >= 0");
}

double EmitterParams::steady_state_population() const {
    const double w2 = rabi_frequency * rabi_frequency;
    return 0.5 * w2 / (w2 + decay_rate * dephasing_rate);
}

double TimeTagStream::mean_rate_hz() const {
    if (duration_ps <= 0) return 0.0;
    return static_cast<double>(timestamps.size()) / (static_cast<double>(duration_ps) * 1e-12);
}

void TimeTagStream::validate() const {
    std::int64_t prev = -1;
    for (auto t : timestamps) {
        if (t <= prev) throw std::invalid_argument("timetag stream: timestamps not strictly increasing");
        prev = t;
    }
    if (!timestamps.empty() && timestamps.back() > duration_ps)
        throw std::invalid_argument("timetag stream: timestamp beyond duration");
}

double g2_analytic(const EmitterParams& params, double tau_seconds) {
    params.validate();
    const double at = std::fabs(tau_seconds);
    const double sigma = params.envelope_rate();
    const double s2 = params.mu_squared();

    // C = cos(mu t), S = sin(mu t)/mu, analytically continued through mu^2 <= 0.
    double c, s;
    const double z = s2 * at * at;
    if (std::fabs(z) < 1e-8) {
        // series in z keeps the mu^2 -> 0 boundary smooth
        c = 1.0 - z / 2.0 + z * z / 24.0;
        s = at * (1.0 - z / 6.0 + z * z / 120.0);
    } else if (s2 > 0.0) {
        const double m = std::sqrt(s2);
        c = std::cos(m * at);
        s = std::sin(m * at) / m;
    } else {
        const double m = std::sqrt(-s2);
        c = std::cosh(m * at);
        s = std::sinh(m * at) / m;
    }
    const double g = 1.0 - (c + sigma * s) * std::exp(-sigma * at);
    return g > 0.0 ? g : 0.0;
}

namespace {

// Resonant Bloch state under the full master equation: excited population p
// and Im(rho_eg) = y (Re part stays zero from the ground state).
struct BlochState {
    double p, y;
};

BlochState bloch_deriv(const EmitterParams& pr, const BlochState& s) {
    return {-pr.decay_rate * s.p - pr.rabi_frequency * s.y,
            -pr.dephasing_rate * s.y + pr.rabi_frequency * (s.p - 0.5)};
}

BlochState rk4_step(const EmitterParams& pr, const BlochState& s, double h) {
    const BlochState k1 = bloch_deriv(pr, s);
    const BlochState k2 = bloch_deriv(pr, {s.p + 0.5 * h * k1.p, s.y + 0.5 * h * k1.y});
    const BlochState k3 = bloch_deriv(pr, {s.p + 0.5 * h * k2.p, s.y + 0.5 * h * k2.y});
    const BlochState k4 = bloch_deriv(pr, {s.p + h * k3.p, s.y + h * k3.y});
    return {s.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
            s.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y)};
}

double max_step(const EmitterParams& pr) {
    double h = 1.0 / pr.decay_rate;
    if (pr.rabi_frequency > 0.0) h = std::min(h, 1.0 / pr.rabi_frequency);
    if (pr.dephasing_rate > 0.0) h = std::min(h, 1.0 / pr.dephasing_rate);
    return h / 200.0;
}

}  // namespace

std::vector<double> oracle_bloch_g2(const EmitterParams& params,
                                    std::span<const double> tau_grid_seconds) {
    params.validate();
    if (params.rabi_frequency <= 0.0)
        throw std::domain_error("bloch oracle: zero drive has no steady-state emission");
    for (std::size_t i = 0; i < tau_grid_seconds.size(); ++i) {
        if (tau_grid_seconds[i] < 0.0 || (i > 0 && tau_grid_seconds[i] < tau_grid_seconds[i - 1]))
            throw std::invalid_argument("bloch oracle: tau grid must be sorted and nonnegative");
    }

    const double hmax = max_step(params);
    if (!tau_grid_seconds.empty()) {
        const double span = tau_grid_seconds.back();
        if (span / hmax > 2e8)
            throw std::domain_error("bloch oracle: step-size underflow for these parameters");
    }

    const double p_ss = params.steady_state_population();
    std::vector<double> out;
    out.reserve(tau_grid_seconds.size());

    BlochState s{0.0, 0.0};
    double t = 0.0;
    for (double tau : tau_grid_seconds) {
        const double span = tau - t;
        if (span > 0.0) {
            const long n = std::lround(std::ceil(span / hmax));
            const double h = span / static_cast<double>(n);
            for (long i = 0; i < n; ++i) s = rk4_step(params, s, h);
            t = tau;
        }
        out.push_back(s.p / p_ss);
    }
    return out;
}

namespace {

// Waiting-time table for the renewal emission process: the no-jump
// evolution from the ground state loses norm at rate gamma_2 * rho_ee,
// so the survival probability n(t) is the complement of the waiting CDF.
struct WaitingTable {
    std::vector<double> t;      // seconds
    std::vector<double> log_n;  // log survival, strictly decreasing
    double tail_rate;           // 1/s, for extrapolation past the table

    // Inverse-CDF draw: returns waiting time in seconds for u in (0,1).
    double sample(double u) const {
        const double target = std::log(u);  // want n(t) = u
        if (target <= log_n.back()) {
            return t.back() + (log_n.back() - target) / tail_rate;
        }
        const auto it = std::lower_bound(log_n.begin(), log_n.end(), target, std::greater<>());
        const std::size_t hi = static_cast<std::size_t>(it - log_n.begin());
        if (hi == 0) return 0.0;
        const std::size_t lo = hi - 1;
        const double f = (log_n[lo] - target) / (log_n[lo] - log_n[hi]);
        return t[lo] + f * (t[hi] - t[lo]);
    }
};

WaitingTable build_waiting_table(const EmitterParams& pr) {
    // Conditional no-emission evolution: full master equation minus the
    // radiative recycling term. Variables: p = rho_ee, g = rho_gg,
    // y = Im rho_eg; norm n = p + g.
    struct S {
        double p, g, y;
    };
    auto deriv = [&pr](const S& s) {
        return S{-pr.decay_rate * s.p - pr.rabi_frequency * s.y,
                 pr.rabi_frequency * s.y,
                 -pr.dephasing_rate * s.y + pr.rabi_frequency * 0.5 * (s.p - s.g)};
    };
    auto step = [&](const S& s, double h) {
        const S k1 = deriv(s);
        const S k2 = deriv({s.p + 0.5 * h * k1.p, s.g + 0.5 * h * k1.g, s.y + 0.5 * h * k1.y});
        const S k3 = deriv({s.p + 0.5 * h * k2.p, s.g + 0.5 * h * k2.g, s.y + 0.5 * h * k2.y});
        const S k4 = deriv({s.p + h * k3.p, s.g + h * k3.g, s.y + h * k3.y});
        return S{s.p + h / 6.0 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p),
                 s.g + h / 6.0 * (k1.g + 2 * k2.g + 2 * k3.g + k4.g),
                 s.y + h / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y)};
    };

    const double h = max_step(pr);
    WaitingTable table;
    S s{0.0, 1.0, 0.0};
    double t = 0.0;
    table.t.push_back(0.0);
    table.log_n.push_back(0.0);
    const std::size_t max_points = 50'000'000;
    while (true) {
        s = step(s, h);
        t += h;
        const double n = s.p + s.g;
        if (n <= 1e-14) break;
        const double ln = std::log(n);
        if (ln < table.log_n.back()) {  // keep strictly decreasing for the search
            table.t.push_back(t);
            table.log_n.push_back(ln);
        }
        if (table.t.size() > max_points)
            throw std::domain_error("emission sampler: waiting-time table overflow");
    }
    if (table.t.size() < 3)
        throw std::domain_error("emission sampler: degenerate waiting-time table");
    const std::size_t k = table.t.size() - 1;
    table.tail_rate = (table.log_n[k - 1] - table.log_n[k]) / (table.t[k] - table.t[k - 1]);
    return table;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

TimeTagStream sample_emissions(const EmitterParams& params,
                               std::int64_t duration_ps,
                               std::uint64_t seed,
                               int segments) {
    params.validate();
    if (duration_ps < 0) throw std::invalid_argument("sample_emissions: negative duration");
    if (segments < 1) throw std::invalid_argument("sample_emissions: segments must be >= 1");

    TimeTagStream out;
    out.duration_ps = duration_ps;
    if (duration_ps == 0 || params.rabi_frequency == 0.0) return out;

    const WaitingTable table = build_waiting_table(params);

    const std::int64_t seg_len = duration_ps / segments;
    for (int seg = 0; seg < segments; ++seg) {
        const std::int64_t t0 = static_cast<std::int64_t>(seg) * seg_len;
        const std::int64_t t1 = (seg == segments - 1) ? duration_ps : t0 + seg_len;
        std::mt19937_64 rng(segments == 1 ? seed : mix_seed(seed, static_cast<std::uint64_t>(seg)));
        std::uniform_real_distribution<double> uni(std::numeric_limits<double>::min(), 1.0);

        double t_ps = static_cast<double>(t0);
        while (true) {
            t_ps += table.sample(uni(rng)) * 1e12;
            if (t_ps >= static_cast<double>(t1)) break;
            std::int64_t tag = static_cast<std::int64_t>(std::llround(t_ps));
            if (!out.timestamps.empty() && tag <= out.timestamps.back())
                tag = out.timestamps.back() + 1;  // 1 ps quantization floor
            if (tag >= t1) break;
            out.timestamps.push_back(tag);
        }
    }
    return out;
}

}  // namespace qsim
