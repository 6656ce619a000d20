#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qsim/emitter.hpp"
#include "qsim/optics.hpp"

namespace qsim {

// Vectorized model: y = f(params, x).
using FitModel = std::function<std::vector<double>(std::span<const double>, std::span<const double>)>;

struct FitProblem {
    FitModel model;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;  // optional; empty = unweighted
    std::vector<double> initial;
    std::vector<double> lower;  // optional; empty = unbounded
    std::vector<double> upper;

    void validate() const;
};

struct FitResult {
    std::vector<double> parameters;
    std::vector<double> covariance;  // row-major n x n
    double chi2_reduced = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> cost_history;  // accepted costs, nonincreasing

    std::vector<double> parameter_errors() const;  // sqrt of the diagonal
};

// Damped least squares: lambda starts at 1e-3, x0.3 on accepted steps,
// x10 on rejected ones; central-difference Jacobian with per-parameter
// step max(1e-8, 1e-6 |p|); stops on relative cost change < 1e-10 or 200
// iterations. Throws std::runtime_error on singular normal equations.
FitResult least_squares(const FitProblem& problem);

// Central-difference Jacobian (rows = data points, cols = parameters);
// step_scale shrinks the step for cross-checking against a finer estimate.
std::vector<std::vector<double>> finite_difference_jacobian(const FitModel& model,
                                                            std::span<const double> x,
                                                            std::span<const double> params,
                                                            double step_scale = 1.0);

// --- model families ---

// g2_analytic convolved with a Gaussian of width sqrt(2) * jitter_sigma
// (trapezoid over +-5 widths, 64 intervals), then baseline + amplitude *.
double model_g2(const EmitterParams& params, double amplitude, double baseline,
                double jitter_sigma_ps, double tau_seconds);

// Parameter layout (rabi, decay, dephasing, amplitude, baseline, jitter_sigma_ps); x in seconds.
FitModel make_g2_model();

// (amplitude, lifetime, offset); x and lifetime share units.
FitModel make_exp_offset_model();

// sum_n w_n L(f - n * spacing; width) over n in [-n_max, n_max] with
// w_{-n} = w_n; used against spectrum traces.
std::vector<double> model_lorentzian_comb(std::span<const double> weights,  // w_0 .. w_nmax
                                          double spacing_hz, double width_hz,
                                          std::span<const double> offsets_hz);

// Parameter layout (w_0 .. w_nmax, width); spacing fixed at build time.
FitModel make_lorentzian_comb_model(int n_max, double spacing_hz);

// (scale, index_gain): y = scale * J_n(index_gain * beta)^2, x = beta.
FitModel make_bessel_intensity_model(int order);

struct HomPairData {
    std::vector<double> tau_seconds;  // shared grid
    std::vector<double> parallel;     // normalized coincidences
    std::vector<double> orthogonal;
    std::vector<double> sigma_parallel;  // optional
    std::vector<double> sigma_orthogonal;
};

struct HomPairFit {
    FitResult result;                  // (rabi, decay, dephasing, arm_delay_ps, jitter_sigma_ps, v_c, tau_c_ps)
    double visibility_at_zero = 0.0;   // (P_orth - P_par) / P_orth from the deconvolved fit
};

// Joint fit of the co- and cross-polarized coincidence curves with shared
// emitter, delay and jitter, and parallel-only (v_c, tau_c).
HomPairFit fit_hom_pair(const HomPairData& data,
                        const EmitterParams& init_params,
                        const HomConfig& init_config,
                        double init_jitter_sigma_ps);

std::string fit_result_to_json(const FitResult& result, std::span<const std::string> names);

}  // namespace qsim
