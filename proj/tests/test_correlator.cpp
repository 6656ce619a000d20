#include <stdexcept>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "qsim/correlator.hpp"

using namespace qsim;

namespace {

TimeTagStream make_stream(std::vector<std::int64_t> ts, std::int64_t duration, std::uint8_t ch = 0) {
    TimeTagStream s;
    s.channel = ch;
    s.timestamps = std::move(ts);
    s.duration_ps = duration;
    return s;
}

TimeTagStream random_stream(std::uint64_t seed, std::size_t n, std::int64_t duration) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> uni(0, duration - 1);
    std::vector<std::int64_t> ts(n);
    for (auto& t : ts) t = uni(rng);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return make_stream(std::move(ts), duration);
}

// independent all-pairs reference: nearest-bin index in floating point
std::vector<std::uint64_t> brute_force(const TimeTagStream& a, const TimeTagStream& b,
                                       std::int64_t bw, std::int64_t window, bool self_skip) {
    const auto half = static_cast<std::int64_t>(window / bw);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(2 * half + 1), 0);
    for (std::size_t i = 0; i < a.timestamps.size(); ++i) {
        for (std::size_t j = 0; j < b.timestamps.size(); ++j) {
            if (self_skip && i == j) continue;
            const double d = static_cast<double>(b.timestamps[j] - a.timestamps[i]);
            const auto k = static_cast<std::int64_t>(
                std::floor(d / static_cast<double>(bw) + 0.5));
            if (k >= -half && k <= half) ++counts[static_cast<std::size_t>(k + half)];
        }
    }
    return counts;
}

}  // namespace

TEST_CASE("single pair lands in the expected bin") {
    const auto a = make_stream({0}, 1000);
    const auto b = make_stream({100}, 1000);
    const auto h = cross_correlate(a, b, 50, 500);
    CHECK(h.total_counts() == 1);
    CHECK(h.counts[static_cast<std::size_t>(h.half_bins() + 2)] == 1);  // +100 ps = bin +2
    CHECK(h.bin_center_ps(h.half_bins() + 2) == 100);
    CHECK(h.tags_a == 1);
    CHECK(h.tags_b == 1);
    CHECK(h.duration_ps == 1000);
}

TEST_CASE("empty inputs give empty histograms") {
    const auto e = make_stream({}, 1000);
    const auto b = make_stream({5, 10}, 1000);
    CHECK(cross_correlate(e, b, 10, 100).total_counts() == 0);
    CHECK(cross_correlate(b, e, 10, 100).total_counts() == 0);
    CHECK(auto_correlate(e, 10, 100).total_counts() == 0);
}

TEST_CASE("cross-correlation matches the all-pairs reference") {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const auto a = random_stream(seed, 500, 200'000);
        const auto b = random_stream(seed + 100, 400, 200'000);
        for (std::int64_t bw : {1, 7, 64}) {
            const auto h = cross_correlate(a, b, bw, 40 * bw);
            const auto ref = brute_force(a, b, bw, 40 * bw, false);
            REQUIRE(h.counts.size() == ref.size());
            for (std::size_t k = 0; k < ref.size(); ++k) CHECK(h.counts[k] == ref[k]);
        }
    }
}

TEST_CASE("autocorrelation matches the reference and is symmetric") {
    // odd bin width keeps integer delays off the edges, so the tie-upward
    // rule cannot break mirror symmetry
    const auto s = random_stream(9, 800, 300'000);
    const auto h = auto_correlate(s, 31, 2048);
    const auto ref = brute_force(s, s, 31, 2048, true);
    const int half = h.half_bins();
    for (std::size_t k = 0; k < ref.size(); ++k) CHECK(h.counts[k] == ref[k]);
    for (int k = 1; k <= half; ++k) {
        CHECK(h.counts[static_cast<std::size_t>(half + k)] ==
              h.counts[static_cast<std::size_t>(half - k)]);
    }
}

TEST_CASE("bin-edge ties go to the upper bin") {
    // delay +25 ps sits exactly on the edge between bins 0 and +1 (bw = 50)
    const auto a = make_stream({0}, 1000);
    const auto up = make_stream({25}, 1000);
    const auto down = make_stream({0}, 1000);
    const auto a2 = make_stream({25}, 1000);
    const auto hu = cross_correlate(a, up, 50, 500);
    CHECK(hu.counts[static_cast<std::size_t>(hu.half_bins() + 1)] == 1);
    const auto hd = cross_correlate(a2, down, 50, 500);  // delay -25: edge of bins 0/-1
    CHECK(hd.counts[static_cast<std::size_t>(hd.half_bins())] == 1);
}

TEST_CASE("uncorrelated uniform streams normalize to one") {
    const std::int64_t duration = 50'000'000;
    const auto a = random_stream(21, 40'000, duration);
    const auto b = random_stream(22, 40'000, duration);
    const auto h = cross_correlate(a, b, 128, 10'000);
    const auto g2 = normalize_to_g2(h);
    const double per_bin = static_cast<double>(h.tags_a) * static_cast<double>(h.tags_b) /
                           static_cast<double>(duration) * 128.0;
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        CHECK(std::fabs(static_cast<double>(h.counts[k]) - per_bin) < 4.0 * std::sqrt(per_bin));
        CHECK(g2[k] == doctest::Approx(static_cast<double>(h.counts[k]) / per_bin).epsilon(1e-12));
    }
}

TEST_CASE("partitioned correlation is bit-identical to a single pass") {
    const auto a = random_stream(31, 3000, 1'000'000);
    const auto b = random_stream(32, 2500, 1'000'000);
    const auto ref = cross_correlate(a, b, 16, 1024, 1);
    for (int parts : {2, 8}) {
        const auto h = cross_correlate(a, b, 16, 1024, parts);
        CHECK(h.counts == ref.counts);
        CHECK(h.tags_a == ref.tags_a);
        CHECK(h.duration_ps == ref.duration_ps);
    }
}

TEST_CASE("merge: identity, commutativity, and metadata") {
    const auto a = random_stream(41, 300, 100'000);
    const auto b = random_stream(42, 300, 100'000);
    const auto h = cross_correlate(a, b, 16, 512);

    CorrelationHistogram zero;
    zero.bin_width_ps = h.bin_width_ps;
    zero.window_ps = h.window_ps;
    zero.counts.assign(h.counts.size(), 0);
    const auto same = merge(h, zero);
    CHECK(same.counts == h.counts);
    CHECK(same.tags_a == h.tags_a);

    const auto ab = merge(h, same);
    const auto ba = merge(same, h);
    CHECK(ab.counts == ba.counts);
    CHECK(ab.tags_b == ba.tags_b);
    CHECK(ab.duration_ps == h.duration_ps + same.duration_ps);

    CorrelationHistogram other = zero;
    other.bin_width_ps = 2 * h.bin_width_ps;
    CHECK_THROWS_AS(merge(h, other), std::invalid_argument);
}

TEST_CASE("per-segment merge equals the concatenated stream") {
    // segments separated by more than the window, so no cross-segment pairs
    const std::int64_t window = 2048, seg = 500'000, gap = 10'000;
    const auto a1 = random_stream(51, 2000, seg);
    const auto b1 = random_stream(52, 2000, seg);
    auto a2 = random_stream(53, 2000, seg);
    auto b2 = random_stream(54, 2000, seg);

    TimeTagStream a_cat = a1, b_cat = b1;
    for (auto t : a2.timestamps) a_cat.timestamps.push_back(t + seg + gap);
    for (auto t : b2.timestamps) b_cat.timestamps.push_back(t + seg + gap);
    a_cat.duration_ps = b_cat.duration_ps = 2 * seg + gap;

    const auto whole = cross_correlate(a_cat, b_cat, 16, window);
    const auto merged = merge(cross_correlate(a1, b1, 16, window),
                              cross_correlate(a2, b2, 16, window));
    CHECK(whole.counts == merged.counts);
    CHECK(whole.tags_a == merged.tags_a);
    CHECK(whole.tags_b == merged.tags_b);
}

TEST_CASE("input validation") {
    const auto good = make_stream({10, 20}, 100);
    const auto unsorted = make_stream({20, 10}, 100);
    CHECK_THROWS_AS(cross_correlate(unsorted, good, 10, 50), std::invalid_argument);
    CHECK_THROWS_AS(cross_correlate(good, good, 0, 50), std::invalid_argument);
    CHECK_THROWS_AS(cross_correlate(good, good, 10, 5), std::invalid_argument);
    CHECK_THROWS_AS(cross_correlate(good, good, 10, 50, 0), std::invalid_argument);
}

TEST_CASE("normalization error paths") {
    const auto a = make_stream({10}, 100);
    const auto e = make_stream({}, 100);
    auto h = cross_correlate(a, e, 10, 50);
    CHECK_THROWS_AS(normalize_to_g2(h), std::domain_error);  // zero rate on b
    h.tags_b = 1;
    h.duration_ps = 40;  // shorter than the window
    CHECK_THROWS_AS(normalize_to_g2(h), std::domain_error);
    CHECK_THROWS_AS(normalize_by_plateau(h, 1'000'000), std::domain_error);
}
