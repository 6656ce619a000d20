#include "qsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "qsim/modulator.hpp"

namespace qsim {

void FitProblem::validate() const {
    if (!model) throw std::invalid_argument("fit: model not set");
    if (x.size() != y.size()) throw std::invalid_argument("fit: x/y length mismatch");
    if (!sigma.empty() && sigma.size() != y.size()) throw std::invalid_argument("fit: sigma length mismatch");
    if (initial.empty()) throw std::invalid_argument("fit: empty initial guess");
    if (x.size() < initial.size()) throw std::invalid_argument("fit: fewer data points than parameters");
    if (!lower.empty() && (lower.size() != initial.size() || upper.size() != initial.size()))
        throw std::invalid_argument("fit: bounds length mismatch");
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (initial[i] < lower[i] || initial[i] > upper[i])
            throw std::invalid_argument("fit: initial guess outside bounds");
    }
}

std::vector<double> FitResult::parameter_errors() const {
    const std::size_t n = parameters.size();
    std::vector<double> err(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = covariance[i * n + i];
        err[i] = v > 0.0 ? std::sqrt(v) : 0.0;
    }
    return err;
}

namespace {

// Cholesky solve of A x = b for symmetric positive definite A (row-major).
// Returns false when the factorization breaks down.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n, std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return false;
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * x[k];
        x[ii] = s / a[ii * n + ii];
    }
    return true;
}

bool invert_spd(const std::vector<double>& a, std::size_t n, std::vector<double>& inv) {
    inv.assign(n * n, 0.0);
    std::vector<double> e(n, 0.0), col;
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        if (!cholesky_solve(a, e, n, col)) return false;
        for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
    }
    // symmetrize
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double v = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = inv[j * n + i] = v;
        }
    return true;
}

double weighted_cost(const std::vector<double>& model_y, const FitProblem& p) {
    double c = 0.0;
    for (std::size_t i = 0; i < model_y.size(); ++i) {
        double r = model_y[i] - p.y[i];
        if (!p.sigma.empty()) r /= p.sigma[i];
        c += r * r;
    }
    return c;
}

}  // namespace

std::vector<std::vector<double>> finite_difference_jacobian(const FitModel& model,
                                                            std::span<const double> x,
                                                            std::span<const double> params,
                                                            double step_scale) {
    const std::size_t n = params.size();
    std::vector<std::vector<double>> jac(x.size(), std::vector<double>(n, 0.0));
    std::vector<double> p(params.begin(), params.end());
    for (std::size_t j = 0; j < n; ++j) {
        const double h = step_scale * std::max(1e-8, 1e-6 * std::fabs(p[j]));
        const double keep = p[j];
        p[j] = keep + h;
        const auto hi = model(p, x);
        p[j] = keep - h;
        const auto lo = model(p, x);
        p[j] = keep;
        for (std::size_t i = 0; i < x.size(); ++i) jac[i][j] = (hi[i] - lo[i]) / (2.0 * h);
    }
    return jac;
}

FitResult least_squares(const FitProblem& problem) {
    problem.validate();
    const std::size_t n = problem.initial.size();
    const std::size_t m = problem.x.size();

    auto clamp = [&](std::vector<double>& p) {
        if (problem.lower.empty()) return;
        for (std::size_t j = 0; j < n; ++j) p[j] = std::clamp(p[j], problem.lower[j], problem.upper[j]);
    };

    std::vector<double> p = problem.initial;
    clamp(p);
    std::vector<double> fy = problem.model(p, problem.x);
    double cost = weighted_cost(fy, problem);

    FitResult res;
    res.cost_history.push_back(cost);

    double lambda = 1e-3;
    int iter = 0;
    bool converged = false;
    std::vector<double> a(n * n), g(n), step;

    while (iter < 200) {
        ++iter;
        const auto jac = finite_difference_jacobian(problem.model, problem.x, p);

        // normal equations with residual weighting
        std::fill(a.begin(), a.end(), 0.0);
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double w = problem.sigma.empty() ? 1.0 : 1.0 / (problem.sigma[i] * problem.sigma[i]);
            const double r = fy[i] - problem.y[i];
            for (std::size_t j = 0; j < n; ++j) {
                g[j] += w * jac[i][j] * r;
                for (std::size_t k = 0; k <= j; ++k) a[j * n + k] += w * jac[i][j] * jac[i][k];
            }
        }
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = a[k * n + j];

        bool all_zero_diag = true;
        for (std::size_t j = 0; j < n; ++j)
            if (a[j * n + j] > 0.0) all_zero_diag = false;
        if (all_zero_diag) throw std::runtime_error("least_squares: singular (rank-deficient) normal equations");

        bool accepted = false;
        while (lambda < 1e14) {
            std::vector<double> damped = a;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = a[j * n + j];
                damped[j * n + j] = d + lambda * (d > 0.0 ? d : 1.0);
            }
            std::vector<double> rhs(n);
            for (std::size_t j = 0; j < n; ++j) rhs[j] = -g[j];
            if (!cholesky_solve(damped, rhs, n, step)) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> trial = p;
            for (std::size_t j = 0; j < n; ++j) trial[j] += step[j];
            clamp(trial);
            const auto trial_y = problem.model(trial, problem.x);
            const double trial_cost = weighted_cost(trial_y, problem);
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
                p = std::move(trial);
                fy = trial_y;
                cost = trial_cost;
                res.cost_history.push_back(cost);
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (rel < 1e-10) converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            converged = true;  // no downhill step available at any damping
            break;
        }
        if (converged) break;
    }

    res.parameters = p;
    res.iterations = iter;
    res.converged = converged;

    const double dof = static_cast<double>(m > n ? m - n : 1);
    res.chi2_reduced = cost / dof;

    // covariance from the undamped normal equations at the solution
    const auto jac = finite_difference_jacobian(problem.model, problem.x, p);
    std::fill(a.begin(), a.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double w = problem.sigma.empty() ? 1.0 : 1.0 / (problem.sigma[i] * problem.sigma[i]);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k <= j; ++k) a[j * n + k] += w * jac[i][j] * jac[i][k];
    }
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = a[k * n + j];
    std::vector<double> inv;
    if (invert_spd(a, n, inv)) {
        const double scale = problem.sigma.empty() ? res.chi2_reduced : 1.0;
        res.covariance.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n * n; ++i) res.covariance[i] = inv[i] * scale;
    } else {
        res.covariance.assign(n * n, 0.0);
    }
    return res;
}

namespace {

// Gaussian convolution by trapezoid quadrature over +-5 widths.
double convolve_gaussian(const std::function<double(double)>& f, double center, double width) {
    if (width <= 0.0) return f(center);
    constexpr int kIntervals = 64;
    const double span = 5.0 * width;
    const double h = 2.0 * span / kIntervals;
    const double norm = 1.0 / (width * std::sqrt(2.0 * std::acos(-1.0)));
    double acc = 0.0;
    for (int i = 0; i <= kIntervals; ++i) {
        const double u = -span + i * h;
        const double w = (i == 0 || i == kIntervals) ? 0.5 : 1.0;
        acc += w * norm * std::exp(-0.5 * (u / width) * (u / width)) * f(center - u);
    }
    return acc * h;
}

}  // namespace

double model_g2(const EmitterParams& params, double amplitude, double baseline,
                double jitter_sigma_ps, double tau_seconds) {
    const double width = jitter_sigma_ps * std::sqrt(2.0) * 1e-12;
    const double conv = convolve_gaussian([&](double t) { return g2_analytic(params, t); }, tau_seconds, width);
    return baseline + amplitude * conv;
}

FitModel make_g2_model() {
    return [](std::span<const double> p, std::span<const double> x) {
        EmitterParams params{p[0], p[1], p[2]};
        std::vector<double> out;
        out.reserve(x.size());
        for (double t : x) out.push_back(model_g2(params, p[3], p[4], p[5], t));
        return out;
    };
}

FitModel make_exp_offset_model() {
    return [](std::span<const double> p, std::span<const double> x) {
        std::vector<double> out;
        out.reserve(x.size());
        for (double t : x) out.push_back(p[0] * std::exp(-t / p[1]) + p[2]);
        return out;
    };
}

std::vector<double> model_lorentzian_comb(std::span<const double> weights,
                                          double spacing_hz, double width_hz,
                                          std::span<const double> offsets_hz) {
    std::vector<double> out;
    out.reserve(offsets_hz.size());
    const int n_max = static_cast<int>(weights.size()) - 1;
    for (double f : offsets_hz) {
        double v = weights[0] * lorentzian(f, width_hz);
        for (int n = 1; n <= n_max; ++n) {
            v += weights[static_cast<std::size_t>(n)] *
                 (lorentzian(f - n * spacing_hz, width_hz) + lorentzian(f + n * spacing_hz, width_hz));
        }
        out.push_back(v);
    }
    return out;
}

FitModel make_lorentzian_comb_model(int n_max, double spacing_hz) {
    return [n_max, spacing_hz](std::span<const double> p, std::span<const double> x) {
        return model_lorentzian_comb(p.first(static_cast<std::size_t>(n_max + 1)), spacing_hz,
                                     p[static_cast<std::size_t>(n_max + 1)], x);
    };
}

FitModel make_bessel_intensity_model(int order) {
    return [order](std::span<const double> p, std::span<const double> x) {
        std::vector<double> out;
        out.reserve(x.size());
        for (double beta : x) {
            const double j = bessel_j(order, std::fabs(p[1] * beta));
            out.push_back(p[0] * j * j);
        }
        return out;
    };
}

HomPairFit fit_hom_pair(const HomPairData& data,
                        const EmitterParams& init_params,
                        const HomConfig& init_config,
                        double init_jitter_sigma_ps) {
    if (data.parallel.size() != data.tau_seconds.size() || data.orthogonal.size() != data.tau_seconds.size())
        throw std::invalid_argument("fit_hom_pair: data length mismatch");

    const std::size_t half = data.tau_seconds.size();
    FitProblem prob;
    prob.x.reserve(2 * half);
    prob.x.insert(prob.x.end(), data.tau_seconds.begin(), data.tau_seconds.end());
    prob.x.insert(prob.x.end(), data.tau_seconds.begin(), data.tau_seconds.end());
    prob.y = data.parallel;
    prob.y.insert(prob.y.end(), data.orthogonal.begin(), data.orthogonal.end());
    if (!data.sigma_parallel.empty()) {
        prob.sigma = data.sigma_parallel;
        prob.sigma.insert(prob.sigma.end(), data.sigma_orthogonal.begin(), data.sigma_orthogonal.end());
    }

    // (rabi, decay, dephasing, arm_delay_ps, jitter_sigma_ps, v_c, tau_c_ps);
    // time-like parameters carried in ps so the finite-difference step floor
    // stays far below their magnitude
    prob.model = [half](std::span<const double> p, std::span<const double> x) {
        EmitterParams params{p[0], p[1], p[2]};
        const double delay_s = p[3] * 1e-12;
        const double overlap = std::clamp(p[5], 0.0, 1.0);
        const double tau_c_s = std::max(p[6], 1e-3) * 1e-12;
        const double width = p[4] * std::sqrt(2.0) * 1e-12;
        std::vector<double> out;
        out.reserve(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double vc = i < half ? overlap : 0.0;
            auto curve = [&](double t) { return hom_p2_curve(t, params, delay_s, vc, tau_c_s); };
            out.push_back(convolve_gaussian(curve, x[i], width));
        }
        return out;
    };

    prob.initial = {init_params.rabi_frequency, init_params.decay_rate, init_params.dephasing_rate,
                    static_cast<double>(init_config.arm_delay_ps), init_jitter_sigma_ps,
                    init_config.mode_overlap, init_config.coherence_time_s * 1e12};
    prob.lower = {0.0, 1e3, 0.0, 1.0, 0.0, 0.0, 1.0};
    prob.upper = {1e13, 1e13, 1e13, 1e6, 1e4, 1.0, 1e6};

    HomPairFit out;
    out.result = least_squares(prob);

    const auto& p = out.result.parameters;
    EmitterParams fitted{p[0], p[1], p[2]};
    const double overlap = std::clamp(p[5], 0.0, 1.0);
    const double par0 = hom_p2_curve(0.0, fitted, p[3] * 1e-12, overlap, std::max(p[6], 1e-3) * 1e-12);
    const double orth0 = hom_p2_curve(0.0, fitted, p[3] * 1e-12, 0.0, std::max(p[6], 1e-3) * 1e-12);
    if (orth0 <= 0.0) throw std::domain_error("fit_hom_pair: degenerate cross-polarized curve");
    out.visibility_at_zero = (orth0 - par0) / orth0;
    return out;
}

std::string fit_result_to_json(const FitResult& result, std::span<const std::string> names) {
    nlohmann::json j;
    const auto errs = result.parameter_errors();
    nlohmann::json params = nlohmann::json::array();
    for (std::size_t i = 0; i < result.parameters.size(); ++i) {
        params.push_back({{"name", i < names.size() ? names[i] : "p" + std::to_string(i)},
                          {"value", result.parameters[i]},
                          {"error", errs[i]}});
    }
    j["parameters"] = params;
    j["chi2_reduced"] = result.chi2_reduced;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    return j.dump(2);
}

}  // namespace qsim
