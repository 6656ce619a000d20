#include "qsim/correlator.hpp"

#include <algorithm>
#include <cstdlib>
#include <future>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

namespace qsim {

namespace {

// nearest-bin index with edges at half-integer multiples of bw;
// ties at an edge go to the upper bin
inline std::int64_t bin_index(std::int64_t delay, std::int64_t bw) {
    const std::int64_t num = 2 * delay + bw;
    const std::int64_t den = 2 * bw;
    // floor division
    std::int64_t q = num / den;
    if (num % den != 0 && (num < 0)) --q;
    return q;
}

int thread_cap() {
    if (const char* env = std::getenv("QSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

CorrelationHistogram make_histogram(std::int64_t bin_width_ps, std::int64_t window_ps) {
    if (bin_width_ps < 1) throw std::invalid_argument("correlator: bin_width must be >= 1 ps");
    if (window_ps < bin_width_ps) throw std::invalid_argument("correlator: window must be >= bin_width");
    CorrelationHistogram h;
    h.bin_width_ps = bin_width_ps;
    h.window_ps = window_ps;
    h.counts.assign(static_cast<std::size_t>(2 * (window_ps / bin_width_ps) + 1), 0);
    return h;
}

// Correlate a[i0, i1) against all of b. skip_equal_index is the
// autocorrelation case (a and b are the same stream).
void correlate_chunk(const std::vector<std::int64_t>& a,
                     std::size_t i0, std::size_t i1,
                     const std::vector<std::int64_t>& b,
                     bool skip_equal_index,
                     CorrelationHistogram& h) {
    const std::int64_t bw = h.bin_width_ps;
    const std::int64_t K = h.half_bins();
    std::size_t lo = 0;
    for (std::size_t i = i0; i < i1; ++i) {
        const std::int64_t ta = a[i];
        while (lo < b.size() && bin_index(b[lo] - ta, bw) < -K) ++lo;
        for (std::size_t j = lo; j < b.size(); ++j) {
            const std::int64_t d = b[j] - ta;
            if (bin_index(d, bw) > K) break;
            if (skip_equal_index && j == i) continue;
            ++h.counts[static_cast<std::size_t>(bin_index(d, bw) + K)];
        }
    }
}

CorrelationHistogram correlate_impl(const TimeTagStream& a,
                                    const TimeTagStream& b,
                                    std::int64_t bin_width_ps,
                                    std::int64_t window_ps,
                                    int partitions,
                                    bool skip_equal_index) {
    a.validate();
    b.validate();
    if (partitions < 1) throw std::invalid_argument("correlator: partitions must be >= 1");

    const std::size_t n = a.timestamps.size();
    const std::size_t chunk = partitions > 1 ? (n + partitions - 1) / partitions : n;

    std::vector<CorrelationHistogram> parts;
    if (partitions == 1 || n == 0) {
        parts.push_back(make_histogram(bin_width_ps, window_ps));
        correlate_chunk(a.timestamps, 0, n, b.timestamps, skip_equal_index, parts.back());
    } else {
        parts.assign(static_cast<std::size_t>(partitions), make_histogram(bin_width_ps, window_ps));
        const int workers = std::min(partitions, thread_cap());
        std::vector<std::future<void>> jobs;
        for (int p = 0; p < partitions; ++p) {
            const std::size_t i0 = std::min(n, static_cast<std::size_t>(p) * chunk);
            const std::size_t i1 = std::min(n, i0 + chunk);
            auto work = [&, p, i0, i1] {
                correlate_chunk(a.timestamps, i0, i1, b.timestamps, skip_equal_index, parts[static_cast<std::size_t>(p)]);
            };
            if (workers > 1)
                jobs.push_back(std::async(std::launch::async, work));
            else
                work();
        }
        for (auto& j : jobs) j.get();
    }

    CorrelationHistogram out = parts.front();
    for (std::size_t p = 1; p < parts.size(); ++p) {
        for (std::size_t k = 0; k < out.counts.size(); ++k) out.counts[k] += parts[p].counts[k];
    }
    out.tags_a = a.timestamps.size();
    out.tags_b = b.timestamps.size();
    out.duration_ps = std::max(a.duration_ps, b.duration_ps);
    return out;
}

}  // namespace

std::uint64_t CorrelationHistogram::total_counts() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

CorrelationHistogram cross_correlate(const TimeTagStream& a,
                                     const TimeTagStream& b,
                                     std::int64_t bin_width_ps,
                                     std::int64_t window_ps,
                                     int partitions) {
    return correlate_impl(a, b, bin_width_ps, window_ps, partitions, false);
}

CorrelationHistogram auto_correlate(const TimeTagStream& s,
                                    std::int64_t bin_width_ps,
                                    std::int64_t window_ps) {
    return correlate_impl(s, s, bin_width_ps, window_ps, 1, true);
}

std::vector<double> normalize_to_g2(const CorrelationHistogram& hist) {
    if (hist.duration_ps <= hist.window_ps)
        throw std::domain_error("normalize_to_g2: duration must exceed the window");
    if (hist.tags_a == 0 || hist.tags_b == 0)
        throw std::domain_error("normalize_to_g2: zero rate on a channel");
    const double d = static_cast<double>(hist.duration_ps);
    const double denom = static_cast<double>(hist.tags_a) / d *
                         static_cast<double>(hist.tags_b) / d *
                         static_cast<double>(hist.bin_width_ps) * d;
    std::vector<double> g2;
    g2.reserve(hist.counts.size());
    for (auto c : hist.counts) g2.push_back(static_cast<double>(c) / denom);
    return g2;
}

std::vector<double> normalize_by_plateau(const CorrelationHistogram& hist,
                                         std::int64_t plateau_from_ps) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
        if (std::llabs(hist.bin_center_ps(static_cast<int>(k))) >= plateau_from_ps) {
            sum += static_cast<double>(hist.counts[k]);
            ++n;
        }
    }
    if (n == 0 || sum <= 0.0) throw std::domain_error("normalize_by_plateau: empty plateau region");
    const double mean = sum / static_cast<double>(n);
    std::vector<double> out;
    out.reserve(hist.counts.size());
    for (auto c : hist.counts) out.push_back(static_cast<double>(c) / mean);
    return out;
}

CorrelationHistogram merge(const CorrelationHistogram& h1, const CorrelationHistogram& h2) {
    if (h1.bin_width_ps != h2.bin_width_ps || h1.window_ps != h2.window_ps)
        throw std::invalid_argument("merge: histogram geometries differ");
    CorrelationHistogram out = h1;
    for (std::size_t k = 0; k < out.counts.size(); ++k) out.counts[k] += h2.counts[k];
    out.tags_a += h2.tags_a;
    out.tags_b += h2.tags_b;
    out.duration_ps += h2.duration_ps;
    return out;
}

}  // namespace qsim
