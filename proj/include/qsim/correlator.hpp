#pragma once

#include <cstdint>
#include <vector>

#include "qsim/emitter.hpp"

namespace qsim {

// Binned coincidence counts over a symmetric delay window. Odd bin count;
// the center bin straddles tau = 0 with edges at +-bin_width/2.
struct CorrelationHistogram {
    std::int64_t bin_width_ps = 0;
    std::int64_t window_ps = 0;  // T; half_bins = floor(T / bin_width)
    std::vector<std::uint64_t> counts;  // size 2*half_bins + 1

    // normalization metadata
    std::uint64_t tags_a = 0;
    std::uint64_t tags_b = 0;
    std::int64_t duration_ps = 0;

    int half_bins() const { return static_cast<int>(window_ps / bin_width_ps); }
    std::int64_t bin_center_ps(int bin) const { return static_cast<std::int64_t>(bin - half_bins()) * bin_width_ps; }
    std::uint64_t total_counts() const;
};

// All ordered pairs (t_a, t_b) within the window, binned by t_b - t_a
// (full multi-stop correlation, not start-stop). Two-pointer sweep;
// partitions > 1 splits stream a into contiguous chunks correlated
// against all of b and merged, which is bit-identical to a single pass.
// QSIM_THREADS caps the worker count.
CorrelationHistogram cross_correlate(const TimeTagStream& a,
                                     const TimeTagStream& b,
                                     std::int64_t bin_width_ps,
                                     std::int64_t window_ps,
                                     int partitions = 1);

// Autocorrelation of one stream; excludes the i == i self pairs.
CorrelationHistogram auto_correlate(const TimeTagStream& s,
                                    std::int64_t bin_width_ps,
                                    std::int64_t window_ps);

// g2[bin] = counts / (rate_a * rate_b * bin_width * duration); uncorrelated
// streams normalize to 1. Throws std::domain_error on zero rates.
std::vector<double> normalize_to_g2(const CorrelationHistogram& hist);

// Experimental-practice alternative: divide by the mean count of the bins
// with |tau| >= plateau_from_ps.
std::vector<double> normalize_by_plateau(const CorrelationHistogram& hist,
                                         std::int64_t plateau_from_ps);

// Elementwise sum; geometries must match. Associative and commutative.
CorrelationHistogram merge(const CorrelationHistogram& h1, const CorrelationHistogram& h2);

}  // namespace qsim
